#include "smearfm/smear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "smearfm/errors.hpp"

namespace smearfm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double DoubleAngleVector::norm() const { return std::hypot(u, v); }

DoubleAngleVector encode_double_angle(const SmearVector& s) {
  const double mag = s.norm();
  if (mag == 0.0) return {0.0, 0.0};
  // (u^2 - v^2, 2uv)/|s|: only even monomials, so s and -s encode identically.
  return {(s.u * s.u - s.v * s.v) / mag, 2.0 * (s.u * s.v) / mag};
}

SmearVector decode_double_angle(const DoubleAngleVector& d) {
  const double mag = d.norm();
  if (mag == 0.0) return {0.0, 0.0};
  const double phi = 0.5 * std::atan2(d.v, d.u);  // (-pi/2, pi/2]
  return {mag * std::cos(phi), mag * std::sin(phi)};
}

double epe_s(const SmearVector& pred, const SmearVector& gt) {
  const double diff = std::hypot(pred.u - gt.u, pred.v - gt.v);
  const double sum = std::hypot(pred.u + gt.u, pred.v + gt.v);
  return std::min(diff, sum);
}

namespace {

// Bilinear flow sample at a real-valued position; false when the position is
// outside [0, w-1] x [0, h-1].
bool sample_flow(const FlowField& f, double x, double y, FlowVector* out) {
  if (!(x >= 0.0) || !(y >= 0.0) || !(x <= f.width - 1.0) || !(y <= f.height - 1.0)) {
    return false;
  }
  int x0 = static_cast<int>(std::floor(x));
  int y0 = static_cast<int>(std::floor(y));
  if (x0 >= f.width - 1) x0 = f.width - 2;
  if (y0 >= f.height - 1) y0 = f.height - 2;
  if (f.width == 1) x0 = 0;
  if (f.height == 1) y0 = 0;
  const int x1 = std::min(x0 + 1, f.width - 1);
  const int y1 = std::min(y0 + 1, f.height - 1);
  const double ax = x - x0;
  const double ay = y - y0;
  const FlowVector& f00 = f.at(x0, y0);
  const FlowVector& f10 = f.at(x1, y0);
  const FlowVector& f01 = f.at(x0, y1);
  const FlowVector& f11 = f.at(x1, y1);
  out->u = (1.0 - ay) * ((1.0 - ax) * f00.u + ax * f10.u) +
           ay * ((1.0 - ax) * f01.u + ax * f11.u);
  out->v = (1.0 - ay) * ((1.0 - ax) * f00.v + ax * f10.v) +
           ay * ((1.0 - ax) * f01.v + ax * f11.v);
  return true;
}

// One round trip (i,j) -> warp by a -> warp by b; returns the distance back
// to (i,j), or +inf if either warp leaves the domain.
double round_trip(const FlowField& a, const FlowField& b, int i, int j) {
  const FlowVector& fa = a.at(i, j);
  const double qx = i + fa.u;
  const double qy = j + fa.v;
  FlowVector fb;
  if (!sample_flow(b, qx, qy, &fb)) return kInf;
  const double rx = qx + fb.u;
  const double ry = qy + fb.v;
  return std::hypot(rx - i, ry - j);
}

}  // namespace

CrossCheckResult cross_check(const FlowField& fw, const FlowField& bw,
                             double eps_cr) {
  if (fw.width != bw.width || fw.height != bw.height) {
    throw DimensionMismatch("cross_check: flow fields differ in size");
  }
  if (fw.width <= 0 || fw.height <= 0) {
    throw EmptyInput("cross_check: empty flow field");
  }
  CrossCheckResult r;
  r.map.width = fw.width;
  r.map.height = fw.height;
  r.map.mask.assign(static_cast<std::size_t>(fw.width) * fw.height, 0);
  r.distance.assign(r.map.mask.size(), kInf);
  for (int j = 0; j < fw.height; ++j) {
    for (int i = 0; i < fw.width; ++i) {
      const double d_fwd = round_trip(fw, bw, i, j);
      const double d_bwd = round_trip(bw, fw, i, j);
      const double d = d_fwd + d_bwd;
      const std::size_t k = static_cast<std::size_t>(j) * fw.width + i;
      r.distance[k] = d;
      r.map.mask[k] = (d <= eps_cr) ? 1 : 0;
    }
  }
  return r;
}

double sigma_from_raw(double w) {
  // softplus, overflow-safe
  if (w > 30.0) return w;
  return std::log1p(std::exp(w));
}

namespace {
double sigmoid(double w) { return 1.0 / (1.0 + std::exp(-w)); }
}  // namespace

double loss_gaussian_nll(const DoubleAngleVector& pred,
                         const DoubleAngleVector& gt, double w) {
  const double sigma = sigma_from_raw(w);
  const double s2 = sigma * sigma;
  const double du = pred.u - gt.u;
  const double dv = pred.v - gt.v;
  return (du * du + dv * dv) / (2.0 * s2) + std::log(s2);
}

double loss_masked(const DoubleAngleVector& pred, const DoubleAngleVector& gt,
                   double w, int m_cr, double alpha) {
  const double sigma = sigma_from_raw(w);
  const double s2 = sigma * sigma;
  const double nll = m_cr ? loss_gaussian_nll(pred, gt, w) : 0.0;
  const double arg = (1.0 - m_cr) / s2 - alpha;
  return nll + std::max(arg, 0.0);
}

LossGrad loss_gaussian_nll_grad(const DoubleAngleVector& pred,
                                const DoubleAngleVector& gt, double w) {
  const double sigma = sigma_from_raw(w);
  const double s2 = sigma * sigma;
  const double du = pred.u - gt.u;
  const double dv = pred.v - gt.v;
  LossGrad g;
  g.du = du / s2;
  g.dv = dv / s2;
  // dL/dsigma = -r^2/sigma^3 + 2/sigma, chained with dsigma/dw = sigmoid(w).
  const double r2 = du * du + dv * dv;
  g.dw = (-r2 / (s2 * sigma) + 2.0 / sigma) * sigmoid(w);
  return g;
}

LossGrad loss_masked_grad(const DoubleAngleVector& pred,
                          const DoubleAngleVector& gt, double w, int m_cr,
                          double alpha) {
  if (m_cr) return loss_gaussian_nll_grad(pred, gt, w);
  const double sigma = sigma_from_raw(w);
  const double s2 = sigma * sigma;
  LossGrad g;
  if (1.0 / s2 - alpha > 0.0) {
    g.dw = (-2.0 / (s2 * sigma)) * sigmoid(w);
  }
  return g;
}

std::vector<std::pair<double, double>> sparsification_curve(
    const std::vector<double>& errors, const std::vector<double>& sigmas,
    const std::vector<double>& fractions) {
  const std::size_t n = errors.size();
  if (n == 0) throw EmptyInput("sparsification_curve: no errors");
  if (sigmas.size() != n) {
    throw DimensionMismatch("sparsification_curve: errors/sigmas length mismatch");
  }
  // Highest sigma first; equal sigmas drop in index order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sigmas[a] > sigmas[b];
  });
  // Suffix means over the kept (lowest-sigma) entries.
  std::vector<double> suffix_sum(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    suffix_sum[k] = suffix_sum[k + 1] + errors[order[k]];
  }
  const double full_mean = suffix_sum[0] / static_cast<double>(n);

  std::vector<std::pair<double, double>> curve;
  curve.reserve(fractions.size());
  for (double f : fractions) {
    auto drop = static_cast<std::size_t>(std::ceil(f * static_cast<double>(n)));
    if (drop >= n) drop = n - 1;  // keep at least one entry
    const double mean = suffix_sum[drop] / static_cast<double>(n - drop);
    curve.emplace_back(f, full_mean == 0.0 ? 1.0 : mean / full_mean);
  }
  return curve;
}

}  // namespace smearfm
