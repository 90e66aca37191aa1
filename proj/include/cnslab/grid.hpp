#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace cns {

using Complex = std::complex<double>;

/// Uniform n x n grid on the unit torus [0,1)^2 together with the FFT plans
/// used by every spectral operation on it.
///
/// Physical samples are stored row-major: index j*n + i holds f(i*h, j*h).
/// Spectral coefficients use the half-complex layout of a real transform:
/// index j*(n/2+1) + i holds the mode (kx, ky) = (i, ky(j)) with
/// ky(j) = j for j < n/2 and j - n otherwise.
///
/// Normalization: the forward transform divides by n^2, so the (0,0)
/// coefficient is the mean and Parseval reads mean(f^2) = sum_k |c_k|^2
/// (sum over the full, not half, spectrum).
class TorusGrid {
 public:
  static std::shared_ptr<const TorusGrid> create(std::size_t n);

  TorusGrid(const TorusGrid&) = delete;
  TorusGrid& operator=(const TorusGrid&) = delete;
  ~TorusGrid();

  std::size_t n() const { return n_; }
  double h() const { return h_; }
  std::size_t size() const { return n_ * n_; }
  std::size_t half() const { return n_ / 2 + 1; }
  std::size_t spectral_size() const { return n_ * half(); }

  double x(std::size_t i) const { return static_cast<double>(i) * h_; }
  double y(std::size_t j) const { return static_cast<double>(j) * h_; }

  int kx(std::size_t i) const { return static_cast<int>(i); }
  int ky(std::size_t j) const {
    return j < n_ / 2 ? static_cast<int>(j) : static_cast<int>(j) - static_cast<int>(n_);
  }
  /// True for modes on the Nyquist lines (|kx| = n/2 or |ky| = n/2); their
  /// odd derivatives are set to zero.
  bool is_nyquist(std::size_t i, std::size_t j) const { return i == n_ / 2 || j == n_ / 2; }

  /// Largest |k_i| retained by the 2/3 rule.
  int dealias_cutoff() const { return static_cast<int>(n_ / 3); }

  /// Forward real-to-complex transform, divided by n^2.
  void forward(std::span<const double> in, std::span<Complex> out) const;
  /// Inverse complex-to-real transform (no scaling).
  void inverse(std::span<const Complex> in, std::span<double> out) const;

 private:
  explicit TorusGrid(std::size_t n);

  std::size_t n_;
  double h_;
  void* r2c_ = nullptr;
  void* c2r_ = nullptr;
};

using GridPtr = std::shared_ptr<const TorusGrid>;

}  // namespace cns
