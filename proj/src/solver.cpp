#include "smearfm/solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

#include "smearfm/errors.hpp"

namespace smearfm {

Vec9 vec_row_major(const Mat3& m) {
  Vec9 v;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) v[3 * i + j] = m(i, j);
  return v;
}

Mat3 unvec_row_major(const Vec9& v) {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = v[3 * i + j];
  return m;
}

Vec9 kron_row(const Vec3& a, const Vec3& b) {
  Vec9 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[3 * i + j] = a[i] * b[j];
  return r;
}

ConstraintMatrix build_constraint_rows(std::span<const Correspondence> cs) {
  if (cs.size() != 7) {
    throw ConfigInvalid("build_constraint_rows: expected exactly 7 correspondences");
  }
  ConstraintMatrix m;
  for (int i = 0; i < 7; ++i) {
    m.rows.row(i) = kron_row(cs[i].start(), cs[i].end()).transpose();
  }
  return m;
}

namespace {

double det3_cols(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
  return c0.dot(c1.cross(c2));
}

}  // namespace

std::vector<double> real_cubic_roots(double c3, double c2, double c1,
                                     double c0) {
  const double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
  std::vector<double> roots;
  if (scale == 0.0) return roots;  // identically zero polynomial
  const double a3 = c3 / scale, a2 = c2 / scale, a1 = c1 / scale, a0 = c0 / scale;
  constexpr double kLeading = 1e-12;

  std::vector<std::complex<double>> eigs;
  if (std::abs(a3) > kLeading) {
    Mat3 companion = Mat3::Zero();
    companion(1, 0) = 1.0;
    companion(2, 1) = 1.0;
    companion(0, 2) = -a0 / a3;
    companion(1, 2) = -a1 / a3;
    companion(2, 2) = -a2 / a3;
    Eigen::EigenSolver<Mat3> es(companion, false);
    for (int i = 0; i < 3; ++i) eigs.push_back(es.eigenvalues()[i]);
  } else if (std::abs(a2) > kLeading) {
    Eigen::Matrix2d companion = Eigen::Matrix2d::Zero();
    companion(1, 0) = 1.0;
    companion(0, 1) = -a0 / a2;
    companion(1, 1) = -a1 / a2;
    Eigen::EigenSolver<Eigen::Matrix2d> es(companion, false);
    for (int i = 0; i < 2; ++i) eigs.push_back(es.eigenvalues()[i]);
  } else if (std::abs(a1) > kLeading) {
    eigs.emplace_back(-a0 / a1, 0.0);
  }
  for (const auto& z : eigs) {
    if (std::abs(z.imag()) <= 1e-8 * (1.0 + std::abs(z.real()))) {
      roots.push_back(z.real());
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

std::vector<FundamentalMatrix> seven_point_solutions(const ConstraintMatrix& m) {
  Eigen::JacobiSVD<Mat79> svd(m.rows, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (s[0] <= 0.0 || s[6] <= 1e-10 * s[0]) {
    throw RankDeficientConstraints("constraint matrix rank < 7");
  }
  const Mat3 f1 = unvec_row_major(svd.matrixV().col(7));
  const Mat3 f2 = unvec_row_major(svd.matrixV().col(8));

  // det(f2 + alpha*(f1 - f2)) as a cubic in alpha, via column trilinearity.
  const Mat3 a = f1 - f2;
  const Mat3 b = f2;
  const Vec3 a0 = a.col(0), a1 = a.col(1), a2 = a.col(2);
  const Vec3 b0 = b.col(0), b1 = b.col(1), b2 = b.col(2);
  const double c3 = det3_cols(a0, a1, a2);
  const double c2 = det3_cols(a0, a1, b2) + det3_cols(a0, b1, a2) + det3_cols(b0, a1, a2);
  const double c1 = det3_cols(a0, b1, b2) + det3_cols(b0, a1, b2) + det3_cols(b0, b1, a2);
  const double c0 = det3_cols(b0, b1, b2);

  std::vector<double> alphas = real_cubic_roots(c3, c2, c1, c0);
  if (alphas.empty()) {
    // det vanishes identically (or has no real root at this degree); fall
    // back to the basis endpoints.
    alphas = {0.0, 1.0};
  }
  std::vector<FundamentalMatrix> out;
  out.reserve(alphas.size());
  for (double alpha : alphas) {
    const Mat3 cand = b + alpha * a;
    try {
      out.push_back(normalize_rank2(cand));
    } catch (const RankDeficient&) {
      // rank-1 root, not a usable fundamental matrix
    }
  }
  return out;
}

double ambiguous_objective(std::span<const Correspondence> cs,
                           const FundamentalMatrix& f) {
  double total = 0.0;
  for (const auto& c : cs) {
    const auto [r1, r2] = ambiguous_residual_pair(c, f);
    const double r = std::min(r1, r2);
    total += r * r;
  }
  return total;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Isotropic (Hartley) conditioning: all 14 endpoints centered on their
// centroid and scaled to RMS distance sqrt(2). A single shared transform is
// used for both sides so that sign flips commute with the normalization.
struct Conditioning {
  std::array<Correspondence, 7> cs;
  Mat3 t = Mat3::Identity();
};

Conditioning condition_correspondences(std::span<const Correspondence> in) {
  double cx = 0.0, cy = 0.0;
  for (const auto& c : in) {
    cx += c.midpoint.x;
    cy += c.midpoint.y;
  }
  cx /= static_cast<double>(in.size());
  cy /= static_cast<double>(in.size());
  double rms2 = 0.0;
  for (const auto& c : in) {
    const Vec3 e0 = c.start(), e1 = c.end();
    rms2 += (e0[0] - cx) * (e0[0] - cx) + (e0[1] - cy) * (e0[1] - cy);
    rms2 += (e1[0] - cx) * (e1[0] - cx) + (e1[1] - cy) * (e1[1] - cy);
  }
  rms2 /= 2.0 * static_cast<double>(in.size());
  const double rms = std::sqrt(rms2);
  const double scale = rms > 1e-12 ? std::sqrt(2.0) / rms : 1.0;

  Conditioning out;
  out.t << scale, 0.0, -scale * cx, 0.0, scale, -scale * cy, 0.0, 0.0, 1.0;
  for (std::size_t i = 0; i < 7; ++i) {
    const auto& c = in[i];
    out.cs[i].midpoint = {scale * (c.midpoint.x - cx), scale * (c.midpoint.y - cy)};
    out.cs[i].half_smear = {scale * c.half_smear.u, scale * c.half_smear.v};
  }
  return out;
}

struct Candidate {
  FundamentalMatrix f;       // image coordinates
  FundamentalMatrix f_cond;  // conditioned coordinates (refinement space)
  double objective = kInf;   // ambiguous_objective in image coordinates
};

// All classical 7-point solutions over the 64 sign assignments (the first
// smear's sign is pinned: a global flip equals transposition, to which the
// objective is invariant). Deterministic order: assignment-major.
std::vector<Candidate> enumerate_sign_candidates(
    std::span<const Correspondence> cs, const Conditioning& cond) {
  std::vector<Candidate> out;
  const Mat3 tt = cond.t.transpose();
  for (std::uint32_t assign = 0; assign < 64; ++assign) {
    std::array<Correspondence, 7> flipped = cond.cs;
    for (int i = 0; i < 6; ++i) {
      if ((assign >> i) & 1u) flipped[i + 1] = flipped[i + 1].flipped();
    }
    std::vector<FundamentalMatrix> roots;
    try {
      roots = seven_point_solutions(build_constraint_rows(flipped));
    } catch (const RankDeficientConstraints&) {
      continue;
    }
    for (const auto& root : roots) {
      const Mat3 raw = tt * root.m * cond.t;
      Candidate cand;
      try {
        cand.f = normalize_rank2(raw);
      } catch (const RankDeficient&) {
        continue;
      }
      cand.f_cond = root;
      cand.objective = ambiguous_objective(cs, cand.f);
      out.push_back(cand);
    }
  }
  return out;
}

std::array<TimeDirection, 7> directions_at(std::span<const Correspondence> cs,
                                           const FundamentalMatrix& f) {
  std::array<TimeDirection, 7> dirs{};
  for (std::size_t i = 0; i < 7; ++i) {
    const auto [r1, r2] = ambiguous_residual_pair(cs[i], f);
    dirs[i] = (r1 <= r2) ? TimeDirection::kStartToEnd : TimeDirection::kEndToStart;
  }
  return dirs;
}

// Objective-decreasing projected descent on the conditioned cost: steps in
// the 9-space along the (piecewise-quadratic) gradient, reprojected onto the
// rank-2 unit-norm manifold each step; only strictly decreasing steps are
// accepted. Returns the polished matrix and whether the projected gradient
// reached the tolerance.
std::pair<FundamentalMatrix, bool> refine_conditioned(
    const std::array<Correspondence, 7>& cs, const FundamentalMatrix& start,
    const RefineOptions& opt) {
  std::array<Vec9, 7> k1, k2;
  for (int i = 0; i < 7; ++i) {
    k1[i] = kron_row(cs[i].start(), cs[i].end());
    k2[i] = kron_row(cs[i].end(), cs[i].start());
  }
  const auto objective = [&](const Vec9& v) {
    double total = 0.0;
    for (int i = 0; i < 7; ++i) {
      const double r1 = k1[i].dot(v);
      const double r2 = k2[i].dot(v);
      const double r = std::min(std::abs(r1), std::abs(r2));
      total += r * r;
    }
    return total;
  };
  const auto gradient = [&](const Vec9& v) {
    Vec9 g = Vec9::Zero();
    for (int i = 0; i < 7; ++i) {
      const double r1 = k1[i].dot(v);
      const double r2 = k2[i].dot(v);
      if (std::abs(r1) <= std::abs(r2)) {
        g += 2.0 * r1 * k1[i];
      } else {
        g += 2.0 * r2 * k2[i];
      }
    }
    return g;
  };

  Vec9 v = vec_row_major(start.m);
  double obj = objective(v);
  double step = 0.25;
  bool converged = false;
  for (int it = 0; it < opt.max_iterations; ++it) {
    Vec9 g = gradient(v);
    g -= g.dot(v) * v;  // tangent to the unit-norm constraint
    const double gnorm = g.norm();
    if (gnorm <= opt.grad_tol * std::max(1.0, obj)) {
      converged = true;
      break;
    }
    bool accepted = false;
    while (step > 1e-16) {
      const Vec9 trial_raw = v - (step / gnorm) * g;
      FundamentalMatrix trial;
      try {
        trial = normalize_rank2(unvec_row_major(trial_raw));
      } catch (const RankDeficient&) {
        step *= 0.5;
        continue;
      }
      const Vec9 tv = vec_row_major(trial.m);
      const double tobj = objective(tv);
      if (tobj < obj) {
        v = tv;
        obj = tobj;
        step = std::min(step * 1.5, 1.0);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No decreasing step exists at representable step sizes; treat the
      // iterate as stationary for this tolerance.
      converged = gnorm <= std::max(opt.grad_tol, 1e-8) * std::max(1.0, obj);
      break;
    }
  }
  FundamentalMatrix out;
  out.m = unvec_row_major(v);
  return {out, converged};
}

SolverResult result_at(std::span<const Correspondence> cs,
                       const FundamentalMatrix& f, double objective,
                       bool converged) {
  SolverResult r;
  r.f = f;
  r.objective = objective;
  r.directions = directions_at(cs, f);
  r.converged = converged;
  return r;
}

}  // namespace

std::vector<FundamentalMatrix> ambiguous_candidates(
    std::span<const Correspondence> cs) {
  if (cs.size() != 7) {
    throw ConfigInvalid("ambiguous_candidates: expected exactly 7 correspondences");
  }
  const Conditioning cond = condition_correspondences(cs);
  const std::vector<Candidate> candidates = enumerate_sign_candidates(cs, cond);
  std::vector<FundamentalMatrix> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(c.f);
  return out;
}

SolverResult solve_ambiguous_seven_point(std::span<const Correspondence> cs,
                                         const RefineOptions& opt) {
  if (cs.size() != 7) {
    throw ConfigInvalid("solve_ambiguous_seven_point: expected exactly 7 correspondences");
  }
  const Conditioning cond = condition_correspondences(cs);
  std::vector<Candidate> candidates = enumerate_sign_candidates(cs, cond);
  if (candidates.empty()) {
    throw RankDeficientConstraints("solve_ambiguous_seven_point: every sign assignment is degenerate");
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.objective < b.objective;
                   });

  const Mat3 tt = cond.t.transpose();
  FundamentalMatrix best_f = candidates[0].f;
  double best_obj = candidates[0].objective;
  bool best_converged = true;
  const std::size_t n_refine = std::min<std::size_t>(3, candidates.size());
  for (std::size_t i = 0; i < n_refine; ++i) {
    const auto [f_ref, conv] = refine_conditioned(cond.cs, candidates[i].f_cond, opt);
    FundamentalMatrix f_img;
    try {
      f_img = normalize_rank2(tt * f_ref.m * cond.t);
    } catch (const RankDeficient&) {
      continue;
    }
    const double obj = ambiguous_objective(cs, f_img);
    if (obj < best_obj) {
      best_f = f_img;
      best_obj = obj;
      best_converged = conv;
    }
  }
  return result_at(cs, best_f, best_obj, best_converged);
}

SolverResult exhaustive_sign_search(std::span<const Correspondence> cs) {
  if (cs.size() != 7) {
    throw ConfigInvalid("exhaustive_sign_search: expected exactly 7 correspondences");
  }
  const Conditioning cond = condition_correspondences(cs);
  const std::vector<Candidate> candidates = enumerate_sign_candidates(cs, cond);
  if (candidates.empty()) {
    throw AllDegenerate("exhaustive_sign_search: every sign assignment is degenerate");
  }
  const Candidate* best = &candidates[0];
  for (const auto& c : candidates) {
    if (c.objective < best->objective) best = &c;
  }
  return result_at(cs, best->f, best->objective, true);
}

}  // namespace smearfm
