#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "smearfm/epipolar.hpp"
#include "smearfm/rng.hpp"
#include "smearfm/types.hpp"

namespace smearfm::test {

inline FundamentalMatrix random_fundamental(Rng& rng) {
  while (true) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = rng.normal();
    try {
      return normalize_rank2(m);
    } catch (const RankDeficient&) {
    }
  }
}

inline Correspondence random_correspondence(Rng& rng, double coord_scale = 100.0,
                                            double smear_scale = 10.0) {
  Correspondence c;
  c.midpoint = {rng.uniform(-coord_scale, coord_scale), rng.uniform(-coord_scale, coord_scale)};
  c.half_smear = {rng.normal(0.0, smear_scale), rng.normal(0.0, smear_scale)};
  return c;
}

// Smear consistent with f under the StartToEnd assignment: the start point is
// free, the end point is picked on the start point's epipolar line.
inline Correspondence consistent_correspondence(Rng& rng, const FundamentalMatrix& f) {
  while (true) {
    const Vec3 a(rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0), 1.0);
    const Vec3 l = f.m.transpose() * a;  // line of end candidates: l . b = 0
    if (std::abs(l[1]) < 1e-6) continue;
    const double bx = rng.uniform(-50.0, 50.0);
    const double by = -(l[0] * bx + l[2]) / l[1];
    if (std::abs(by) > 1e4) continue;
    Correspondence c;
    c.midpoint = {0.5 * (a[0] + bx), 0.5 * (a[1] + by)};
    c.half_smear = {0.5 * (bx - a[0]), 0.5 * (by - a[1])};
    return c;
  }
}

// Frobenius distance to the closest of {+g, -g, +g^T, -g^T}.
inline double dist_up_to_transpose_sign(const FundamentalMatrix& f,
                                        const FundamentalMatrix& g) {
  const Mat3 gt = g.m.transpose();
  return std::min({(f.m - g.m).norm(), (f.m + g.m).norm(), (f.m - gt).norm(),
                   (f.m + gt).norm()});
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  const auto ranks = [n](const std::vector<double>& v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    for (std::size_t k = 0; k < n; ++k) r[order[k]] = static_cast<double>(k);
    return r;
  };
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const double mean = (static_cast<double>(n) - 1.0) / 2.0;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (ra[i] - mean) * (rb[i] - mean);
    da += (ra[i] - mean) * (ra[i] - mean);
    db += (rb[i] - mean) * (rb[i] - mean);
  }
  return num / std::sqrt(da * db);
}

}  // namespace smearfm::test
