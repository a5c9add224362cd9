// Copyright 2026 The ASG Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "asg/error.hpp"

namespace asg {

inline constexpr double kFiniteDifferenceStep = 1e-6;

// Entries smaller than this are compared on an absolute scale.
inline constexpr double kRelativeErrorFloor = 1e-3;

// Central differences of `loss()` w.r.t. each scalar behind `params`. Every
// parameter is restored after it has been probed.
template <typename LossFn>
std::vector<double> central_differences(LossFn&& loss, std::span<double* const> params,
                                        double step = kFiniteDifferenceStep) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& x = *params[i];
    const double saved = x;
    x = saved + step;
    const double up = loss();
    x = saved - step;
    const double down = loss();
    x = saved;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kRelativeErrorFloor});
  return std::abs(analytic - numeric) / scale;
}

inline double max_relative_error(std::span<const double> analytic,
                                 std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) {
    throw Error(ErrorCode::kLengthMismatch, "gradient vectors differ in length");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double e = relative_error(analytic[i], numeric[i]);
    if (!std::isfinite(e)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, e);
  }
  return worst;
}

}  // namespace asg
