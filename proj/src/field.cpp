#include "cnslab/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cnslab/error.hpp"

namespace cns {

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* where) {
  if (&a != &b && a.n() != b.n()) {
    throw InvalidArgument(std::string(where) + ": fields live on different grids (n=" +
                          std::to_string(a.n()) + " vs n=" + std::to_string(b.n()) + ")");
  }
}

ScalarField::ScalarField(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), 0.0) {}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size()) {
    throw InvalidArgument("ScalarField: expected " + std::to_string(grid_->size()) + " samples, got " +
                          std::to_string(values_.size()));
  }
}

ScalarField::ScalarField(GridPtr grid, double constant)
    : grid_(std::move(grid)), values_(grid_->size(), constant) {}

ScalarField ScalarField::sample(GridPtr grid, const std::function<double(double, double)>& f) {
  ScalarField out(grid);
  const std::size_t n = grid->n();
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) out(i, j) = f(grid->x(i), grid->y(j));
  }
  return out;
}

double ScalarField::mean() const {
  // Pairwise-friendly summation is not needed at these sizes; plain accumulate
  // in long double keeps drift well below 1e-14.
  long double s = 0.0L;
  for (double v : values_) s += v;
  return static_cast<double>(s / static_cast<long double>(values_.size()));
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(*grid_, o.grid(), "ScalarField::+=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(*grid_, o.grid(), "ScalarField::-=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(const ScalarField& o) {
  require_same_grid(*grid_, o.grid(), "ScalarField::*=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] *= o.values_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField& ScalarField::operator+=(double s) {
  for (double& v : values_) v += s;
  return *this;
}

ScalarField ScalarField::map(const std::function<double(double)>& f) const {
  ScalarField out(*this);
  for (double& v : out.values_) v = f(v);
  return out;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }
ScalarField operator*(ScalarField a, double s) { return a *= s; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }
ScalarField operator-(ScalarField a) { return a *= -1.0; }

VectorField::VectorField(ScalarField x_, ScalarField y_) : x(std::move(x_)), y(std::move(y_)) {
  require_same_grid(x.grid(), y.grid(), "VectorField");
}

VectorField::VectorField(GridPtr grid) : x(grid), y(grid) {}

VectorField& VectorField::operator+=(const VectorField& o) {
  x += o.x;
  y += o.y;
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& o) {
  x -= o.x;
  y -= o.y;
  return *this;
}

VectorField& VectorField::operator*=(double s) {
  x *= s;
  y *= s;
  return *this;
}

VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(VectorField a, double s) { return a *= s; }
VectorField operator*(double s, VectorField a) { return a *= s; }
VectorField operator*(const ScalarField& s, const VectorField& v) { return {s * v.x, s * v.y}; }

ScalarField magnitude(const VectorField& v) {
  ScalarField out(v.grid_ptr());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::hypot(v.x[k], v.y[k]);
  return out;
}

ScalarField dot(const VectorField& a, const VectorField& b) { return a.x * b.x + a.y * b.y; }

}  // namespace cns
