#include "nslf/numerics/finite_diff.hpp"

#include <algorithm>
#include <cmath>

namespace nslf {

double relative_error(double analytic, double numeric, double abs_floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), abs_floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double central(const std::function<double()>& loss, double& x, double h) {
  const double orig = x;
  x = orig + h;
  const double up = loss();
  x = orig - h;
  const double down = loss();
  x = orig;
  return (up - down) / (2 * h);
}

}  // namespace

FdReport finite_diff_check(const std::function<double()>& loss, const ParamBlocks<double>& params,
                           const GradBundle<double>& analytic, const FdOptions& opts) {
  analytic.check_shape(params);
  FdReport report;
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      if (opts.select && !opts.select(b, i)) continue;
      double& x = params[b][i];
      const double a = analytic.blocks[b][i];
      const double coarse = central(loss, x, opts.step);
      double err = relative_error(a, coarse, opts.abs_floor);
      if (err > opts.refine_above) {
        const double fine = central(loss, x, opts.step / 8);
        const double fine_err = relative_error(a, fine, opts.abs_floor);
        err = std::min(err, fine_err);
        if (err > opts.refine_above) {
          // On a kink the analytic value equals one of the one-sided derivatives, which differ.
          const double h = opts.step / 64;
          const double orig = x;
          const double mid = loss();
          x = orig + h;
          const double right = (loss() - mid) / h;
          x = orig - h;
          const double left = (mid - loss()) / h;
          x = orig;
          const double one_sided = std::min(relative_error(a, right, opts.abs_floor),
                                            relative_error(a, left, opts.abs_floor));
          if (one_sided <= opts.refine_above) {
            if (relative_error(left, right, opts.abs_floor) > 1e-2) {
              ++report.kinks_skipped;
              continue;
            }
            err = one_sided;
          }
        }
      }
      ++report.checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_block = b;
        report.worst_index = i;
      }
    }
  }
  return report;
}

FdReport finite_diff_check(const std::function<double(std::span<const double>)>& f,
                           std::span<double> params, std::span<const double> analytic,
                           const FdOptions& opts) {
  if (params.size() != analytic.size()) throw ShapeError("finite_diff_check: gradient size mismatch");
  ParamBlocks<double> blocks{params};
  GradBundle<double> g;
  g.blocks.emplace_back(analytic.begin(), analytic.end());
  return finite_diff_check([&] { return f(params); }, blocks, g, opts);
}

}  // namespace nslf
