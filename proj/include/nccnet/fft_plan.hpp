// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NCCNET_FFT_PLAN_HPP
#define NCCNET_FFT_PLAN_HPP

#include <complex>
#include <cstddef>
#include <memory>

namespace nccnet::fft {

// Aligned scratch buffers for one real<->complex 2D transform of extent
// rows x cols. Plans come from a process-wide cache guarded by a mutex, so
// any number of workers may hold their own Workspace concurrently.
class Workspace {
 public:
  Workspace(int rows, int cols);
  ~Workspace();
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int spectrum_cols() const noexcept { return cols_ / 2 + 1; }

  double* real() noexcept { return real_; }
  std::complex<double>* spectrum() noexcept { return spectrum_; }

  void forward();  // real() -> spectrum()
  void inverse();  // spectrum() -> real(), unnormalized

 private:
  int rows_;
  int cols_;
  double* real_;
  std::complex<double>* spectrum_;
  void* forward_plan_;
  void* inverse_plan_;
};

int next_pow2(int n);

}  // namespace nccnet::fft

#endif  // NCCNET_FFT_PLAN_HPP
