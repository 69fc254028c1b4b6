#include "smearfm/robust.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "smearfm/epipolar.hpp"
#include "smearfm/errors.hpp"
#include "smearfm/rng.hpp"

namespace smearfm {

std::vector<std::size_t> lowest_sigma_indices(std::span<const double> sigmas,
                                              double fraction) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw ConfigInvalid("selection fraction outside (0, 1]");
  }
  const std::size_t n = sigmas.size();
  const auto count = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sigmas[a] < sigmas[b];
  });
  order.resize(std::min(count, n));
  return order;
}

Selection select_top_fraction(const SmearField& field, double fraction) {
  std::vector<double> sigmas(field.size());
  for (std::size_t i = 0; i < sigmas.size(); ++i) sigmas[i] = field.samples[i].sigma;
  const std::vector<std::size_t> keep = lowest_sigma_indices(sigmas, fraction);

  Selection sel;
  sel.points.reserve(keep.size());
  sel.smears.reserve(keep.size());
  sel.sigmas.reserve(keep.size());
  for (std::size_t idx : keep) {
    const int x = static_cast<int>(idx % field.width);
    const int y = static_cast<int>(idx / field.width);
    const SmearSample& s = field.samples[idx];
    sel.points.push_back({x + 0.5, y + 0.5});
    sel.smears.push_back({s.u, s.v});
    sel.sigmas.push_back(s.sigma);
  }
  sel.indices = keep;
  return sel;
}

namespace {

// Distinct 7-subset of [0, n) via Floyd's algorithm; deterministic in rng.
std::array<std::size_t, 7> draw_subset(Rng& rng, std::size_t n) {
  std::array<std::size_t, 7> out{};
  std::size_t filled = 0;
  for (std::size_t k = n - 7; k < n; ++k) {
    const std::size_t r = rng.below(k + 1);
    bool seen = false;
    for (std::size_t i = 0; i < filled; ++i) {
      if (out[i] == r) {
        seen = true;
        break;
      }
    }
    out[filled++] = seen ? k : r;
  }
  return out;
}

double truncated_error(const Correspondence& c, const FundamentalMatrix& f,
                       double tau) {
  return std::min(sampson_error_min(c, f).value, tau);
}

// Consensus refit: minimizes the truncated symmetrized Sampson error with
// direction-aware iteratively reweighted linear solves. Each proposal picks
// the winning time direction and Sampson weight per inlier at the current
// estimate, solves the weighted homogeneous system, reprojects onto the
// rank-2 unit-norm manifold, and is accepted only if the truncated objective
// over the current consensus set decreases. Outer rounds re-estimate the
// consensus set, which recruits smears the initial hypothesis missed.
FundamentalMatrix consensus_refit(const std::vector<Correspondence>& cs,
                                  const FundamentalMatrix& start, double tau,
                                  int max_rounds) {
  // One shared isotropic conditioning for all linear solves.
  double cx = 0.0, cy = 0.0;
  for (const auto& c : cs) {
    cx += c.midpoint.x;
    cy += c.midpoint.y;
  }
  cx /= static_cast<double>(cs.size());
  cy /= static_cast<double>(cs.size());
  double rms2 = 0.0;
  for (const auto& c : cs) {
    const Vec3 e0 = c.start(), e1 = c.end();
    rms2 += (e0[0] - cx) * (e0[0] - cx) + (e0[1] - cy) * (e0[1] - cy);
    rms2 += (e1[0] - cx) * (e1[0] - cx) + (e1[1] - cy) * (e1[1] - cy);
  }
  rms2 /= 2.0 * static_cast<double>(cs.size());
  const double scale = rms2 > 1e-24 ? std::sqrt(2.0 / rms2) : 1.0;
  Mat3 t;
  t << scale, 0.0, -scale * cx, 0.0, scale, -scale * cy, 0.0, 0.0, 1.0;
  const Mat3 tt = t.transpose();
  const Mat3 t_inv = t.inverse();
  const Mat3 tt_inv = tt.inverse();
  std::vector<Correspondence> cond(cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    cond[i].midpoint = {scale * (cs[i].midpoint.x - cx), scale * (cs[i].midpoint.y - cy)};
    cond[i].half_smear = {scale * cs[i].half_smear.u, scale * cs[i].half_smear.v};
  }

  FundamentalMatrix f = start;
  std::vector<std::size_t> inliers;
  for (int round = 0; round < max_rounds; ++round) {
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      if (sampson_error_min(cs[i], f).value <= tau) current.push_back(i);
    }
    if (current.size() < 7) break;
    const bool converged_set = current == inliers;
    inliers = std::move(current);

    const auto objective = [&](const FundamentalMatrix& m) {
      double total = 0.0;
      for (std::size_t i : inliers) total += truncated_error(cs[i], m, tau);
      return total;
    };
    double obj = objective(f);
    bool improved = false;
    for (int inner = 0; inner < 25; ++inner) {
      // conditioned current estimate: f = t^T f_cond t
      const Mat3 f_cond = tt_inv * f.m * t_inv;
      Eigen::Matrix<double, 9, 9> normal = Eigen::Matrix<double, 9, 9>::Zero();
      FundamentalMatrix fc;
      fc.m = f_cond;
      const Mat3 fct = f_cond.transpose();
      for (std::size_t i : inliers) {
        const Correspondence& c = cond[i];
        const Vec3 a = c.start(), b = c.end();
        // winning branch and its Sampson denominator at the current estimate
        const double r_fwd = bilinear_form(a, fc.m, b);
        const double r_rev = bilinear_form(b, fc.m, a);
        Vec3 p = a, q = b;
        if (std::abs(r_rev) < std::abs(r_fwd)) std::swap(p, q);
        const Vec3 l = fc.m * q;
        const Vec3 lp = fct * p;
        const double den = l[0] * l[0] + l[1] * l[1] + lp[0] * lp[0] + lp[1] * lp[1];
        if (den < 1e-15) continue;
        const Vec9 k = kron_row(p, q);
        normal += (1.0 / den) * (k * k.transpose());
      }
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> eig(normal);
      FundamentalMatrix proposal;
      try {
        const Mat3 sol = unvec_row_major(eig.eigenvectors().col(0));
        proposal = normalize_rank2(tt * sol * t);
      } catch (const RankDeficient&) {
        break;
      }
      // full step, then damped blends toward it if the full step overshoots
      bool accepted = false;
      for (double lambda : {1.0, 0.5, 0.25, 0.1, 0.05, 0.02}) {
        FundamentalMatrix trial;
        if (lambda == 1.0) {
          trial = proposal;
        } else {
          // align the proposal's sign with f before blending
          const double sign = vec_row_major(f.m).dot(vec_row_major(proposal.m)) < 0.0 ? -1.0 : 1.0;
          try {
            trial = normalize_rank2((1.0 - lambda) * f.m + lambda * sign * proposal.m);
          } catch (const RankDeficient&) {
            continue;
          }
        }
        const double trial_obj = objective(trial);
        if (trial_obj < obj) {
          f = trial;
          obj = trial_obj;
          improved = true;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
    if (converged_set && !improved) break;
  }
  return f;
}

}  // namespace

EstimationReport estimate_fundamental(std::span<const ImagePoint> points,
                                      std::span<const SmearVector> smears,
                                      const RansacConfig& cfg) {
  const std::size_t n = points.size();
  if (smears.size() != n) {
    throw DimensionMismatch("estimate_fundamental: points/smears length mismatch");
  }
  if (n < 7) throw InsufficientData("estimate_fundamental: need at least 7 smears");
  if (cfg.hypotheses < 1 || cfg.block_size < 1) {
    throw ConfigInvalid("estimate_fundamental: hypotheses and block_size must be >= 1");
  }

  std::vector<Correspondence> cs(n);
  for (std::size_t i = 0; i < n; ++i) cs[i] = {points[i], smears[i]};

  const Rng root(cfg.seed);

  // Permuted observation order, shared by the probe stage and preemption.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng perm_rng = root.split(1);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[perm_rng.below(i + 1)]);
  }

  // (a) hypothesis pool: seeded 7-subset draws through the ambiguous minimal
  // solver; degenerate draws are discarded, up to 10x the pool size. A
  // minimal tuple is exactly determined under every sign assignment, so the
  // solver's own cost cannot rank its candidates; each subset's model is
  // instead the candidate with the best truncated consensus on a small probe
  // of the remaining observations.
  const std::size_t probe_count = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::max(cfg.probe_size, 1)));
  std::vector<FundamentalMatrix> pool;
  pool.reserve(cfg.hypotheses);
  const std::size_t max_attempts = 10ull * static_cast<std::size_t>(cfg.hypotheses);
  for (std::size_t attempt = 0;
       attempt < max_attempts && pool.size() < static_cast<std::size_t>(cfg.hypotheses);
       ++attempt) {
    Rng draw_rng = root.split(0x100 + attempt);
    const auto subset = draw_subset(draw_rng, n);
    std::array<Correspondence, 7> sample;
    for (int i = 0; i < 7; ++i) sample[i] = cs[subset[i]];
    const std::vector<FundamentalMatrix> candidates = ambiguous_candidates(sample);
    if (candidates.empty()) continue;
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      double score = 0.0;
      for (std::size_t k = 0; k < probe_count; ++k) {
        score += truncated_error(cs[perm[k]], candidates[c], cfg.tau_se);
      }
      if (score < best_score) {
        best_score = score;
        best = c;
      }
    }
    pool.push_back(candidates[best]);
  }
  if (pool.empty()) {
    throw AllHypothesesDegenerate("estimate_fundamental: no solvable 7-subset found");
  }

  // (b) preemption: breadth-first halving on permuted observation blocks,
  // ranked by cumulative truncated error (ties by hypothesis index).

  std::vector<std::size_t> active(pool.size());
  std::iota(active.begin(), active.end(), 0);
  std::vector<double> score(pool.size(), 0.0);
  std::size_t pos = 0;
  int rounds = 0;
  std::size_t winner = active[0];

  const auto full_inlier_count = [&](const FundamentalMatrix& f) {
    std::size_t count = 0;
    for (const auto& c : cs) {
      if (sampson_error_min(c, f).value <= cfg.tau_se) ++count;
    }
    return count;
  };

  bool stopped_early = false;
  while (active.size() > 1 && pos < n && rounds < cfg.max_iterations) {
    const std::size_t block_end = std::min(pos + static_cast<std::size_t>(cfg.block_size), n);
    for (std::size_t h : active) {
      for (std::size_t k = pos; k < block_end; ++k) {
        score[h] += truncated_error(cs[perm[k]], pool[h], cfg.tau_se);
      }
    }
    pos = block_end;
    ++rounds;
    std::stable_sort(active.begin(), active.end(), [&](std::size_t a, std::size_t b) {
      return score[a] < score[b];
    });
    active.resize((active.size() + 1) / 2);
    winner = active[0];
    if (static_cast<double>(full_inlier_count(pool[winner])) >
        cfg.early_stop_fraction * static_cast<double>(n)) {
      stopped_early = true;
      break;
    }
  }
  if (!stopped_early) winner = active[0];

  // (d) refit the leading survivors on their consensus sets and keep the
  // best truncated consensus over all smears (ties by survivor rank).
  const auto total_cost = [&](const FundamentalMatrix& f) {
    double cost = 0.0;
    for (const auto& c : cs) cost += truncated_error(c, f, cfg.tau_se);
    return cost;
  };
  // Coarse-to-fine: a widened threshold first smooths the truncated cost and
  // recruits the full global-motion basin, then the real threshold polishes.
  const auto anneal_refit = [&](const FundamentalMatrix& start) {
    const FundamentalMatrix coarse =
        consensus_refit(cs, start, 3.0 * cfg.tau_se, std::min(cfg.refit_rounds, 4));
    return consensus_refit(cs, coarse, cfg.tau_se, cfg.refit_rounds);
  };
  FundamentalMatrix f = anneal_refit(pool[winner]);
  double f_cost = total_cost(f);
  for (std::size_t s = 0; s < std::min<std::size_t>(3, active.size()); ++s) {
    if (active[s] == winner) continue;
    const FundamentalMatrix alt = anneal_refit(pool[active[s]]);
    const double alt_cost = total_cost(alt);
    if (alt_cost < f_cost) {
      f = alt;
      f_cost = alt_cost;
    }
  }

  // (e) final report under the refit matrix.
  EstimationReport report;
  report.f = f;
  report.iterations_used = rounds;
  report.per_smear_error.resize(n);
  report.directions.resize(n);
  report.inlier_mask.resize(n);
  report.selected_indices.resize(n);
  std::iota(report.selected_indices.begin(), report.selected_indices.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const SampsonMin sm = sampson_error_min(cs[i], f);
    report.per_smear_error[i] = sm.value;
    report.directions[i] = sm.direction;
    report.inlier_mask[i] = sm.value <= cfg.tau_se ? 1 : 0;
  }
  return report;
}

EstimationReport estimate_from_selection(const Selection& selection,
                                         const RansacConfig& cfg) {
  EstimationReport report = estimate_fundamental(selection.points, selection.smears, cfg);
  report.selected_indices = selection.indices;
  return report;
}

EstimationReport estimate_from_field(const SmearField& field, double fraction,
                                     const RansacConfig& cfg) {
  return estimate_from_selection(select_top_fraction(field, fraction), cfg);
}

std::vector<std::uint8_t> classify_motion(const SmearField& field,
                                          const FundamentalMatrix& f,
                                          double tau_seg, double sigma_gate) {
  if (!(tau_seg > 0.0)) throw ConfigInvalid("classify_motion: tau_seg must be > 0");
  std::vector<std::uint8_t> mask(field.size(), kMotionGlobal);
  for (int y = 0; y < field.height; ++y) {
    for (int x = 0; x < field.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * field.width + x;
      const SmearSample& s = field.samples[idx];
      if (s.u == 0.0 && s.v == 0.0 && s.sigma > sigma_gate) {
        mask[idx] = kMotionUnknown;
        continue;
      }
      const Correspondence c{{x + 0.5, y + 0.5}, {s.u, s.v}};
      mask[idx] = sampson_error_min(c, f).value > tau_seg ? kMotionLocal : kMotionGlobal;
    }
  }
  return mask;
}

}  // namespace smearfm
