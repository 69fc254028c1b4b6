#pragma once

#include <span>
#include <utility>
#include <vector>

#include "smearfm/smear.hpp"
#include "smearfm/types.hpp"

namespace smearfm {

struct FmEvalResult {
  double inlier_percent = 0.0;  // % of correspondences with error <= threshold
  double median_serr = 0.0;
  std::vector<std::pair<double, double>> curve;  // (threshold, ratio)
};

// 50 log-spaced thresholds in [1e-3, 1e2].
std::vector<double> default_curve_grid();

// Consistency of a fundamental matrix with ground-truth smears: inlier
// percentage under the threshold, median symmetrized Sampson error (even
// counts: mean of the middle pair), and the cumulative agreement curve.
FmEvalResult evaluate_fundamental(std::span<const Correspondence> gt,
                                  const FundamentalMatrix& f,
                                  double threshold = 3.0,
                                  std::span<const double> curve_grid = {});

// Mean sign-agnostic endpoint error over the top_fraction lowest-sigma
// pixels of pred, measured against gt.
double epe_summary(const SmearField& pred, const SmearField& gt,
                   double top_fraction);

}  // namespace smearfm
