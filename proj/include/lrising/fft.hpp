#pragma once

// Thin RAII layer over FFTW for the periodic convolutions, autocorrelations
// and structure factors used by the sums and energy code. Plans are created
// with FFTW_ESTIMATE, so results do not depend on timing and repeat
// bit-for-bit.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <functional>
#include <mutex>
#include <vector>

#include "lrising/errors.hpp"

namespace lrising::fft {

namespace detail {

/// FFTW planning is not thread-safe; execution on distinct plans is.
inline std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

}  // namespace detail

inline std::size_t product(const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int k : dims) n *= static_cast<std::size_t>(k);
  return n;
}

/// Forward/backward complex-to-complex transforms on a fixed row-major shape.
class ComplexTransform {
 public:
  explicit ComplexTransform(std::vector<int> dims) : dims_(std::move(dims)), n_(product(dims_)) {
    if (dims_.empty() || n_ == 0) throw DomainError("fft: empty shape");
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_));
    if (!buf_) throw std::bad_alloc();
    std::lock_guard lock(detail::planner_mutex());
    fwd_ = fftw_plan_dft(static_cast<int>(dims_.size()), dims_.data(), buf_, buf_, FFTW_FORWARD,
                         FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft(static_cast<int>(dims_.size()), dims_.data(), buf_, buf_, FFTW_BACKWARD,
                         FFTW_ESTIMATE);
  }

  ComplexTransform(const ComplexTransform&) = delete;
  ComplexTransform& operator=(const ComplexTransform&) = delete;

  ~ComplexTransform() {
    std::lock_guard lock(detail::planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }

  std::size_t size() const noexcept { return n_; }

  /// Unnormalized forward transform: X_k = sum_j x_j e^{-2 pi i k.j / n}.
  std::vector<std::complex<double>> forward(const std::vector<std::complex<double>>& x) {
    load(x);
    fftw_execute(fwd_);
    return store();
  }

  /// Unnormalized backward transform (multiply by 1/size() to invert).
  std::vector<std::complex<double>> backward(const std::vector<std::complex<double>>& x) {
    load(x);
    fftw_execute(bwd_);
    return store();
  }

 private:
  void load(const std::vector<std::complex<double>>& x) {
    if (x.size() != n_) throw DomainError("fft: size mismatch");
    for (std::size_t i = 0; i < n_; ++i) {
      buf_[i][0] = x[i].real();
      buf_[i][1] = x[i].imag();
    }
  }
  std::vector<std::complex<double>> store() const {
    std::vector<std::complex<double>> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = {buf_[i][0], buf_[i][1]};
    return out;
  }

  std::vector<int> dims_;
  std::size_t n_;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

inline std::vector<std::complex<double>> to_complex(const std::vector<double>& x) {
  return {x.begin(), x.end()};
}

/// Periodic convolution (a * b)_i = sum_j a_j b_{i-j} on a row-major grid.
inline std::vector<double> circular_convolution(const std::vector<int>& dims, const std::vector<double>& a,
                                                const std::vector<double>& b) {
  ComplexTransform t(dims);
  auto fa = t.forward(to_complex(a));
  const auto fb = t.forward(to_complex(b));
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  const auto back = t.backward(fa);
  std::vector<double> out(back.size());
  const double scale = 1.0 / static_cast<double>(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = back[i].real() * scale;
  return out;
}

/// Periodic autocorrelation c_delta = sum_j a_j a_{j+delta}.
inline std::vector<double> circular_autocorrelation(const std::vector<int>& dims, const std::vector<double>& a) {
  ComplexTransform t(dims);
  auto fa = t.forward(to_complex(a));
  for (auto& z : fa) z = std::norm(z);
  const auto back = t.backward(fa);
  std::vector<double> out(back.size());
  const double scale = 1.0 / static_cast<double>(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = back[i].real() * scale;
  return out;
}

}  // namespace lrising::fft
