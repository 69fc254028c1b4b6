#pragma once

#include <utility>

#include "smearfm/types.hpp"

namespace smearfm {

// Module-wide numeric tolerances. The defaults can be overridden per call
// where a function takes an explicit epsilon.
namespace tol {
inline constexpr double kDet = 1e-9;           // |det F| after normalization
inline constexpr double kUnitNorm = 1e-12;     // | ||F|| - 1 |
inline constexpr double kRank = 1e-12;         // singular value cutoff
inline constexpr double kDegenerate = 1e-15;   // line / denominator cutoff
}  // namespace tol

enum class ImageSide { kLeft, kRight };

// x^T F y evaluated with a fixed, transpose-symmetric term order:
// bilinear_form(x, F, y) == bilinear_form(y, F^T, x) bit-for-bit. All
// residual code below is built on this so that per-smear sign flips and
// F <-> F^T swaps exchange values exactly rather than to rounding error.
double bilinear_form(const Vec3& x, const Mat3& f, const Vec3& y);

// The two algebraic epipolar residuals of a direction-ambiguous smear:
// (|start^T F end|, |end^T F start|). A correct smear zeroes one of them;
// negating half_smear swaps the pair exactly.
std::pair<double, double> ambiguous_residual_pair(const Correspondence& c,
                                                  const FundamentalMatrix& f);

// First-order geometric (Sampson) error of the smear endpoints under the
// StartToEnd assignment. Returns +infinity when both endpoints sit at the
// epipoles (denominator below degenerate_eps), so scoring loops never halt.
double sampson_error(const Correspondence& c, const FundamentalMatrix& f,
                     double degenerate_eps = tol::kDegenerate);

struct SampsonMin {
  double value = 0.0;
  TimeDirection direction = TimeDirection::kStartToEnd;
};

// Symmetrized Sampson error: the minimum over the two time directions,
// together with the winning assignment (ties resolve to StartToEnd). Exactly
// invariant under transposing F and under negating half_smear.
SampsonMin sampson_error_min(const Correspondence& c,
                             const FundamentalMatrix& f,
                             double degenerate_eps = tol::kDegenerate);

// Epipolar line through the match candidates of p: F*p for the right image,
// F^T*p for the left. Throws DegenerateLine when p is the epipole.
EpipolarLine epipolar_line(const ImagePoint& p, const FundamentalMatrix& f,
                           ImageSide side,
                           double degenerate_eps = tol::kDegenerate);

// Projects m onto the rank-2, unit-Frobenius-norm manifold by zeroing the
// smallest singular value. Idempotent. Throws RankDeficient when the input
// has fewer than two usable singular values.
FundamentalMatrix normalize_rank2(const Mat3& m, double rank_eps = tol::kRank);

}  // namespace smearfm
