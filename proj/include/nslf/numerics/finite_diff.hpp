#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nslf/numerics/grad_bundle.hpp"

namespace nslf {

struct FdOptions {
  double step = 1e-5;
  /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  double abs_floor = 1e-6;
  /// Components above this relative error are re-measured with step / 8 before being reported;
  /// when the two difference quotients disagree the point sits on a kink (ReLU, cell edge) and
  /// the component is counted as skipped instead.
  double refine_above = 1e-4;
  /// Restrict the check to a subset of (block, index) pairs; empty = every component.
  std::function<bool(std::size_t block, std::size_t index)> select;
};

struct FdReport {
  double max_rel_error = 0.0;
  std::size_t worst_block = 0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::size_t kinks_skipped = 0;
};

double relative_error(double analytic, double numeric, double abs_floor);

/// Compares `analytic` with central differences of `loss`. `loss` must read the current values
/// of `params` (they are perturbed in place and restored).
FdReport finite_diff_check(const std::function<double()>& loss, const ParamBlocks<double>& params,
                           const GradBundle<double>& analytic, const FdOptions& opts = {});

/// Flat-vector form: f maps the parameter vector to a scalar.
FdReport finite_diff_check(const std::function<double(std::span<const double>)>& f,
                           std::span<double> params, std::span<const double> analytic,
                           const FdOptions& opts = {});

}  // namespace nslf
