#pragma once

#include <functional>
#include <vector>

#include "cnslab/field.hpp"

namespace cns {

/// Fourier coefficients of a real field in the half-complex layout of
/// TorusGrid. Coefficient (0,0) is the mean.
class SpectralField {
 public:
  explicit SpectralField(GridPtr grid);
  SpectralField(GridPtr grid, std::vector<Complex> coeffs);

  const TorusGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }

  std::span<const Complex> coeffs() const { return coeffs_; }
  std::span<Complex> coeffs() { return coeffs_; }

  Complex operator()(std::size_t i, std::size_t j) const { return coeffs_[j * grid_->half() + i]; }
  Complex& operator()(std::size_t i, std::size_t j) { return coeffs_[j * grid_->half() + i]; }

  /// Sum of |c_k|^2 over the full spectrum; equals mean(f^2).
  double energy() const;

  /// Multiplies every mode by m(kx, ky) (integer wavenumbers).
  SpectralField& apply(const std::function<Complex(int, int)>& m);

 private:
  GridPtr grid_;
  std::vector<Complex> coeffs_;
};

/// Weight of half-spectrum column i when summing over the full spectrum.
double mode_weight(const TorusGrid& g, std::size_t i);

SpectralField to_spectral(const ScalarField& f);
ScalarField to_physical(const SpectralField& c);

ScalarField apply_multiplier(const ScalarField& f, const std::function<Complex(int, int)>& m);

VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& v);
/// dv_y/dx - dv_x/dy.
ScalarField curl2d(const VectorField& v);
ScalarField laplacian(const ScalarField& f);
ScalarField partial_x(const ScalarField& f);
ScalarField partial_y(const ScalarField& f);

/// Tolerance on |mean| for operations that require mean-zero input.
inline constexpr double kMeanZeroTolerance = 1e-10;

/// Solves -Δg = f for mean-zero g. Throws InvalidArgument when |mean(f)| > 1e-10.
ScalarField inverse_laplacian(const ScalarField& f);

struct LerayParts {
  VectorField solenoidal;  ///< P v, carries the constant mode
  VectorField gradient;    ///< Q v = v - P v
};

/// Helmholtz decomposition v = P v + Q v with div P v = 0 and curl Q v = 0.
LerayParts leray_project(const VectorField& v);

/// Sum of the modes with 1 <= |k| <= n (Euclidean |k|, zero mode excluded).
ScalarField spectral_truncate(const ScalarField& b, int n);

/// 2/3-rule truncation: zeroes every mode with |kx| or |ky| above the cutoff.
ScalarField dealias(const ScalarField& f);
VectorField dealias(const VectorField& v);
/// Product of the dealiased factors, dealiased again.
ScalarField dealiased_product(const ScalarField& a, const ScalarField& b);

/// Norm selector: L_p (p in [1, inf]), homogeneous Sobolev H^s (s = -1 or 1),
/// or full H^1.
struct Norm {
  enum class Kind { Lp, Hdot, H1 };
  Kind kind = Kind::Lp;
  double p = 2.0;
  int s = 1;

  static Norm L(double p) { return {Kind::Lp, p, 0}; }
  static Norm Linf();
  static Norm Hdot(int s) { return {Kind::Hdot, 2.0, s}; }
  static Norm H1() { return {Kind::H1, 2.0, 1}; }
};

/// L_p by equal-weight quadrature over the samples (L_inf is the grid max);
/// Sobolev norms by the multiplier (2π|k|)^s. H^{-1} requires mean zero.
double norm(const ScalarField& f, Norm spec);
/// Norm of |v| (Euclidean magnitude) for L_p; sum of squares of the
/// component norms for the Hilbert norms.
double norm(const VectorField& v, Norm spec);

/// L2 norm of the full gradient matrix, ||∇v||_2.
double gradient_l2(const VectorField& v);
/// Grid max of the Frobenius norm of ∇v.
double gradient_linf(const VectorField& v);
/// L2 norm of the Hessian tensor, ||∇²v||_2, computed spectrally.
double hessian_l2(const VectorField& v);

/// Mean of the product (L2 inner product on the unit torus).
double inner(const ScalarField& a, const ScalarField& b);
double inner(const VectorField& a, const VectorField& b);

}  // namespace cns
