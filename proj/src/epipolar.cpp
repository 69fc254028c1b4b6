#include "smearfm/epipolar.hpp"

#include <Eigen/SVD>

#include <limits>

#include "smearfm/errors.hpp"

namespace smearfm {

double bilinear_form(const Vec3& x, const Mat3& f, const Vec3& y) {
  const auto t = [&](int i, int j) { return (x[i] * y[j]) * f(i, j); };
  // Diagonal terms map to themselves under (x<->y, F->F^T); off-diagonal
  // terms swap within each parenthesized pair, and IEEE addition commutes.
  const double diag = (t(0, 0) + t(1, 1)) + t(2, 2);
  const double off = (t(0, 1) + t(1, 0)) + ((t(0, 2) + t(2, 0)) + (t(1, 2) + t(2, 1)));
  return diag + off;
}

std::pair<double, double> ambiguous_residual_pair(const Correspondence& c,
                                                  const FundamentalMatrix& f) {
  const Vec3 a = c.start();
  const Vec3 b = c.end();
  return {std::abs(bilinear_form(a, f.m, b)), std::abs(bilinear_form(b, f.m, a))};
}

double sampson_error(const Correspondence& c, const FundamentalMatrix& f,
                     double degenerate_eps) {
  const Vec3 a = c.start();
  const Vec3 b = c.end();
  const Mat3 ft = f.m.transpose();
  const double num = bilinear_form(a, f.m, b);
  const Vec3 l = f.m * b;
  const Vec3 lp = ft * a;
  const double den =
      (l[0] * l[0] + l[1] * l[1]) + (lp[0] * lp[0] + lp[1] * lp[1]);
  if (den < degenerate_eps) return std::numeric_limits<double>::infinity();
  return (num * num) / den;
}

SampsonMin sampson_error_min(const Correspondence& c,
                             const FundamentalMatrix& f,
                             double degenerate_eps) {
  const double fwd = sampson_error(c, f, degenerate_eps);
  const double rev = sampson_error(c, f.transposed(), degenerate_eps);
  if (fwd <= rev) return {fwd, TimeDirection::kStartToEnd};
  return {rev, TimeDirection::kEndToStart};
}

EpipolarLine epipolar_line(const ImagePoint& p, const FundamentalMatrix& f,
                           ImageSide side, double degenerate_eps) {
  const Vec3 ph = homogenize(p);
  Vec3 l;
  if (side == ImageSide::kRight) {
    l = f.m * ph;
  } else {
    const Mat3 ft = f.m.transpose();
    l = ft * ph;
  }
  if (std::abs(l[0]) < degenerate_eps && std::abs(l[1]) < degenerate_eps) {
    throw DegenerateLine("epipolar line undefined: point is the epipole");
  }
  return {l[0], l[1], l[2]};
}

FundamentalMatrix normalize_rank2(const Mat3& m, double rank_eps) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  if (s[1] <= rank_eps) {
    throw RankDeficient("matrix has rank < 2, cannot normalize");
  }
  const double scale = std::sqrt(s[0] * s[0] + s[1] * s[1]);
  Vec3 s_unit(s[0] / scale, s[1] / scale, 0.0);
  FundamentalMatrix out;
  out.m = svd.matrixU() * s_unit.asDiagonal() * svd.matrixV().transpose();
  return out;
}

}  // namespace smearfm
