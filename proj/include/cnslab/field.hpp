#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cnslab/grid.hpp"

namespace cns {

/// Real samples of a function on the torus grid.
class ScalarField {
 public:
  explicit ScalarField(GridPtr grid);
  ScalarField(GridPtr grid, std::vector<double> values);
  ScalarField(GridPtr grid, double constant);

  /// Samples f(x, y) at the grid nodes.
  static ScalarField sample(GridPtr grid, const std::function<double(double, double)>& f);

  const TorusGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t idx) const { return values_[idx]; }
  double& operator[](std::size_t idx) { return values_[idx]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[j * grid_->n() + i]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[j * grid_->n() + i]; }

  /// Integral over the unit torus (equal-weight quadrature, so also the mean).
  double mean() const;
  double min() const;
  double max() const;
  bool all_finite() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(const ScalarField& o);
  ScalarField& operator*=(double s);
  ScalarField& operator+=(double s);

  /// Pointwise map.
  ScalarField map(const std::function<double(double)>& f) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(ScalarField a, const ScalarField& b);
ScalarField operator*(ScalarField a, double s);
ScalarField operator*(double s, ScalarField a);
ScalarField operator-(ScalarField a);

/// Two scalar components on one grid.
struct VectorField {
  ScalarField x;
  ScalarField y;

  VectorField(ScalarField x_, ScalarField y_);
  explicit VectorField(GridPtr grid);

  const TorusGrid& grid() const { return x.grid(); }
  const GridPtr& grid_ptr() const { return x.grid_ptr(); }

  VectorField& operator+=(const VectorField& o);
  VectorField& operator-=(const VectorField& o);
  VectorField& operator*=(double s);
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(VectorField a, double s);
VectorField operator*(double s, VectorField a);
/// Componentwise product with a scalar field.
VectorField operator*(const ScalarField& s, const VectorField& v);

/// Pointwise Euclidean magnitude.
ScalarField magnitude(const VectorField& v);
/// Pointwise dot product.
ScalarField dot(const VectorField& a, const VectorField& b);

/// Throws InvalidArgument unless both fields live on the same grid object
/// (or on grids with equal n).
void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* where);

}  // namespace cns
