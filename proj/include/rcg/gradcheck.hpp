// Copyright 2026 The rcg authors
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

#ifndef RCG_GRADCHECK_HPP
#define RCG_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rcg/layers.hpp"

namespace rcg {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double max_rel_err() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.max_rel_err);
    return m;
  }
  bool pass(double tolerance) const { return max_rel_err() < tolerance; }
};

/// Guarded relative error so near-zero gradients do not blow up the ratio.
inline double grad_rel_err(double analytic, double numeric) {
  const double denom = std::max({1e-6, std::fabs(analytic), std::fabs(numeric)});
  return std::fabs(analytic - numeric) / denom;
}

/// Compares analytic gradients (already accumulated in each ParamRef's grad
/// tensor) against central finite differences of `loss_fn`, which must
/// recompute the scalar loss from the current parameter values. Runs in
/// double precision only; every parameter element is perturbed, so keep the
/// network small.
template <typename LossFn>
GradCheckReport finite_diff_check(const std::vector<ParamRef<double>>& params, LossFn&& loss_fn,
                                  double h = 1e-5) {
  GradCheckReport report;
  for (const auto& p : params) {
    GradCheckEntry entry;
    entry.name = p.name;
    Tensor<double>& value = *p.value;
    for (std::size_t i = 0; i < value.data.size(); ++i) {
      const double saved = value.data[i];
      value.data[i] = saved + h;
      const double lp = loss_fn();
      value.data[i] = saved - h;
      const double lm = loss_fn();
      value.data[i] = saved;
      const double numeric = (lp - lm) / (2.0 * h);
      const double analytic = p.grad->data[i];
      entry.max_rel_err = std::max(entry.max_rel_err, grad_rel_err(analytic, numeric));
      entry.max_abs_err = std::max(entry.max_abs_err, std::fabs(analytic - numeric));
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace rcg

#endif  // RCG_GRADCHECK_HPP
