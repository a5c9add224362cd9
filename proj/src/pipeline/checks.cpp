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


#include "asg/pipeline/checks.hpp"

namespace asg::pipeline {

std::vector<CheckResult> run_invariant_suite(const CheckOptions& o) {
  using CheckFn = CheckResult (*)(const CheckOptions&);
  static constexpr CheckFn kChecks[] = {
      check_row_stochastic,
      check_uniform_ln4,
      check_single_pair_zero,
      check_kl_self_zero,
      check_alpha_zero_reduction,
      check_kl_nonnegative,
      check_argmax_tau_invariance,
      check_merge_box_algebra,
      [](const CheckOptions& x) { return check_contrastive_gradient(x, ContrastiveObjective::kIra); },
      [](const CheckOptions& x) { return check_contrastive_gradient(x, ContrastiveObjective::kArsa); },
      [](const CheckOptions& x) { return check_contrastive_gradient(x, ContrastiveObjective::kSoft); },
      check_decoder_gradient,
  };
  std::vector<CheckResult> out;
  for (CheckFn fn : kChecks) out.push_back(fn(o));
  return out;
}

RunReport run_check(const RunConfig& cfg, const CheckOptions& options) {
  RunReport report;
  report.command = "check";
  report.config = config_summary(cfg);
  report.checks = run_invariant_suite(options);
  std::size_t failed = 0;
  for (const auto& c : report.checks) failed += c.passed ? 0 : 1;
  report.counts = {{"checks", report.checks.size()}, {"failed", failed}};
  OutputSet out(cfg.output_dir);
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"max_error", c.max_error},
                      {"tolerance", c.tolerance},
                      {"instances", c.instances}});
  }
  out.write("checks.json", checks.dump(2) + "\n");
  out.finalize(report);
  out.write_report(report);
  return report;
}

}  // namespace asg::pipeline
