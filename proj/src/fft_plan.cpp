// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "nccnet/fft_plan.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <new>
#include <utility>

#include "nccnet/error.hpp"

namespace nccnet::fft {
namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// FFTW planning is not thread-safe; execution of an existing plan on new
// (equally aligned) arrays is. Plans live for the whole process.
std::mutex g_plan_mutex;

PlanPair plans_for(int rows, int cols) {
  static std::map<std::pair<int, int>, PlanPair> cache;
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto it = cache.find({rows, cols});
  if (it != cache.end()) return it->second;
  const std::size_t n_real = static_cast<std::size_t>(rows) * cols;
  const std::size_t n_cplx = static_cast<std::size_t>(rows) * (cols / 2 + 1);
  double* in = fftw_alloc_real(n_real);
  fftw_complex* out = fftw_alloc_complex(n_cplx);
  PlanPair p{fftw_plan_dft_r2c_2d(rows, cols, in, out, FFTW_ESTIMATE),
             fftw_plan_dft_c2r_2d(rows, cols, out, in, FFTW_ESTIMATE)};
  fftw_free(in);
  fftw_free(out);
  if (!p.forward || !p.inverse) throw Error("FFTW planning failed");
  cache.emplace(std::make_pair(rows, cols), p);
  return p;
}

}  // namespace

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

Workspace::Workspace(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw ArgumentError("FFT extent must be positive");
  PlanPair p = plans_for(rows, cols);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
  real_ = fftw_alloc_real(static_cast<std::size_t>(rows) * cols);
  spectrum_ = reinterpret_cast<std::complex<double>*>(
      fftw_alloc_complex(static_cast<std::size_t>(rows) * (cols / 2 + 1)));
  if (!real_ || !spectrum_) {
    fftw_free(real_);
    fftw_free(spectrum_);
    throw std::bad_alloc();
  }
}

Workspace::~Workspace() {
  fftw_free(real_);
  fftw_free(spectrum_);
}

void Workspace::forward() {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), real_, reinterpret_cast<fftw_complex*>(spectrum_));
}

void Workspace::inverse() {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), reinterpret_cast<fftw_complex*>(spectrum_), real_);
}

}  // namespace nccnet::fft
