#include "smearfm/eval.hpp"

#include <algorithm>
#include <cmath>

#include "smearfm/epipolar.hpp"
#include "smearfm/errors.hpp"
#include "smearfm/robust.hpp"

namespace smearfm {

std::vector<double> default_curve_grid() {
  std::vector<double> grid(50);
  const double lo = std::log10(1e-3), hi = std::log10(1e2);
  for (int i = 0; i < 50; ++i) {
    grid[i] = std::pow(10.0, lo + (hi - lo) * i / 49.0);
  }
  return grid;
}

FmEvalResult evaluate_fundamental(std::span<const Correspondence> gt,
                                  const FundamentalMatrix& f, double threshold,
                                  std::span<const double> curve_grid) {
  if (gt.empty()) throw EmptyInput("evaluate_fundamental: no correspondences");
  std::vector<double> errors(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    errors[i] = sampson_error_min(gt[i], f).value;
  }

  FmEvalResult r;
  const auto below = [&](double t) {
    std::size_t count = 0;
    for (double e : errors) count += (e <= t) ? 1 : 0;
    return static_cast<double>(count);
  };
  r.inlier_percent = 100.0 * below(threshold) / static_cast<double>(errors.size());

  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  r.median_serr = (n % 2 == 1) ? sorted[n / 2]
                               : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  std::vector<double> grid(curve_grid.begin(), curve_grid.end());
  if (grid.empty()) grid = default_curve_grid();
  r.curve.reserve(grid.size());
  for (double t : grid) {
    r.curve.emplace_back(t, below(t) / static_cast<double>(errors.size()));
  }
  return r;
}

double epe_summary(const SmearField& pred, const SmearField& gt,
                   double top_fraction) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw DimensionMismatch("epe_summary: field size mismatch");
  }
  std::vector<double> sigmas(pred.size());
  for (std::size_t i = 0; i < sigmas.size(); ++i) sigmas[i] = pred.samples[i].sigma;
  const std::vector<std::size_t> keep = lowest_sigma_indices(sigmas, top_fraction);
  if (keep.empty()) throw EmptyInput("epe_summary: selection is empty");

  double total = 0.0;
  for (std::size_t idx : keep) {
    const SmearSample& p = pred.samples[idx];
    const SmearSample& g = gt.samples[idx];
    total += epe_s({p.u, p.v}, {g.u, g.v});
  }
  return total / static_cast<double>(keep.size());
}

}  // namespace smearfm
