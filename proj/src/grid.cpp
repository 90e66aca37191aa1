#include "cnslab/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <vector>

#include "cnslab/error.hpp"

namespace cns {
namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// fftw_malloc-backed array (SIMD alignment).
template <typename T>
class AlignedBuffer {
 public:
  AlignedBuffer() = default;
  explicit AlignedBuffer(std::size_t n) { resize(n); }
  AlignedBuffer(const AlignedBuffer&) = delete;
  AlignedBuffer& operator=(const AlignedBuffer&) = delete;
  ~AlignedBuffer() { fftw_free(data_); }
  void resize(std::size_t n) {
    if (n <= capacity_) return;
    fftw_free(data_);
    data_ = static_cast<T*>(fftw_malloc(n * sizeof(T)));
    if (data_ == nullptr) throw std::bad_alloc();
    capacity_ = n;
  }
  T* data() { return data_; }

 private:
  T* data_ = nullptr;
  std::size_t capacity_ = 0;
};

bool is_simd_aligned(const void* p) { return fftw_alignment_of(static_cast<double*>(const_cast<void*>(p))) == 0; }

}  // namespace

std::shared_ptr<const TorusGrid> TorusGrid::create(std::size_t n) {
  if (n < 8 || n % 2 != 0) {
    throw InvalidArgument("TorusGrid: n must be even and >= 8, got " + std::to_string(n));
  }
  return std::shared_ptr<const TorusGrid>(new TorusGrid(n));
}

TorusGrid::TorusGrid(std::size_t n) : n_(n), h_(1.0 / static_cast<double>(n)) {
  AlignedBuffer<double> real(size());
  AlignedBuffer<Complex> spec(spectral_size());
  const int ni = static_cast<int>(n);
  std::lock_guard<std::mutex> lock(planner_mutex());
  r2c_ = fftw_plan_dft_r2c_2d(ni, ni, real.data(), reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
  c2r_ = fftw_plan_dft_c2r_2d(ni, ni, reinterpret_cast<fftw_complex*>(spec.data()), real.data(), FFTW_ESTIMATE);
  if (r2c_ == nullptr || c2r_ == nullptr) throw NumericalFailure("TorusGrid: FFTW planning failed");
}

TorusGrid::~TorusGrid() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (r2c_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(r2c_));
  if (c2r_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(c2r_));
}

void TorusGrid::forward(std::span<const double> in, std::span<Complex> out) const {
  if (in.size() != size() || out.size() != spectral_size()) {
    throw InvalidArgument("TorusGrid::forward: buffer size mismatch");
  }
  // The plans were made for SIMD-aligned arrays; other arrays go through
  // aligned scratch so that the same plan (and the same arithmetic) is used.
  thread_local AlignedBuffer<double> real_scratch;
  thread_local AlignedBuffer<Complex> spec_scratch;
  double* src = const_cast<double*>(in.data());
  if (!is_simd_aligned(src)) {
    real_scratch.resize(in.size());
    std::copy(in.begin(), in.end(), real_scratch.data());
    src = real_scratch.data();
  }
  Complex* dst = out.data();
  if (!is_simd_aligned(dst)) {
    spec_scratch.resize(out.size());
    dst = spec_scratch.data();
  }
  fftw_execute_dft_r2c(static_cast<fftw_plan>(r2c_), src, reinterpret_cast<fftw_complex*>(dst));
  const double scale = 1.0 / static_cast<double>(size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = dst[k] * scale;
}

void TorusGrid::inverse(std::span<const Complex> in, std::span<double> out) const {
  if (in.size() != spectral_size() || out.size() != size()) {
    throw InvalidArgument("TorusGrid::inverse: buffer size mismatch");
  }
  // c2r destroys its input.
  thread_local AlignedBuffer<Complex> spec_scratch;
  thread_local AlignedBuffer<double> real_scratch;
  spec_scratch.resize(in.size());
  std::copy(in.begin(), in.end(), spec_scratch.data());
  double* dst = out.data();
  const bool direct = is_simd_aligned(dst);
  if (!direct) {
    real_scratch.resize(out.size());
    dst = real_scratch.data();
  }
  fftw_execute_dft_c2r(static_cast<fftw_plan>(c2r_), reinterpret_cast<fftw_complex*>(spec_scratch.data()), dst);
  if (!direct) std::copy(dst, dst + out.size(), out.begin());
}

}  // namespace cns
