// Copyright 2026 The nccnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NCCNET_SELFCHECK_HPP
#define NCCNET_SELFCHECK_HPP

#include <string>
#include <vector>

namespace nccnet {

struct CheckResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// Oracle checks: FFT vs direct NCC, NCC and network gradients vs central
// differences, the first Adam step, and raster file round-trips. Every
// tolerance is multiplied by `tolerance_scale` (1 in normal use).
std::vector<CheckResult> run_selfcheck(double tolerance_scale = 1.0);

}  // namespace nccnet

#endif  // NCCNET_SELFCHECK_HPP
