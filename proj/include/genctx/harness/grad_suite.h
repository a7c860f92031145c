#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genctx/autodiff/grad_check.h"

namespace genctx::harness {

struct GradCase {
  std::string name;
  ad::GradCheckReport report;
  std::size_t parameters = 0;  // only for whole-model cases
};

/// Names of every case, in run order.
std::vector<std::string> grad_case_names();

/// Central-difference checks (h = 1e-5, rel tol 1e-4, double precision)
/// over every differentiable op plus small end-to-end graphs of the context
/// variants. `filter` keeps cases whose name contains it.
std::vector<GradCase> run_grad_suite(std::uint64_t seed = 7, const std::string& filter = "");

}  // namespace genctx::harness
