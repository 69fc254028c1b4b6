#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "smearfm/smear.hpp"
#include "smearfm/solver.hpp"
#include "smearfm/types.hpp"

namespace smearfm {

struct RansacConfig {
  double tau_se = 1.0;              // inlier threshold on the symmetrized Sampson error
  int max_iterations = 1000;        // cap on preemption block rounds
  double early_stop_fraction = 0.90;
  int hypotheses = 512;
  int block_size = 64;
  std::uint64_t seed = 0;
  int probe_size = 32;              // observations used to pick one model per subset
  int refit_rounds = 12;            // consensus re-estimation rounds in the final refit
};

struct EstimationReport {
  FundamentalMatrix f;
  std::vector<std::uint8_t> inlier_mask;     // per selected smear
  std::vector<double> per_smear_error;       // symmetrized Sampson errors
  std::vector<TimeDirection> directions;
  int iterations_used = 0;                   // preemption block rounds
  std::vector<std::size_t> selected_indices; // source indices of the inputs
};

// Smears kept for estimation: the fraction with the lowest predicted sigma.
struct Selection {
  std::vector<ImagePoint> points;
  std::vector<SmearVector> smears;
  std::vector<std::size_t> indices;  // row-major pixel / source indices
  std::vector<double> sigmas;
};

// Indices of the round(fraction * n) smallest sigmas; every selected sigma
// is <= every unselected one, ties broken by index. Result is sorted by
// (sigma, index), so a smaller fraction selects a prefix of a larger one.
std::vector<std::size_t> lowest_sigma_indices(std::span<const double> sigmas,
                                              double fraction);

// Per-pixel selection from a dense field; points are pixel centers.
Selection select_top_fraction(const SmearField& field, double fraction);

// Preemptive RANSAC over 7-point subsets with the direction-ambiguous
// minimal solver: a fixed hypothesis pool is scored on observation blocks by
// cumulative truncated symmetrized Sampson error, halving the pool after
// each block; the winner is refit on its consensus set. Deterministic in
// (inputs, cfg.seed). Throws InsufficientData (< 7 smears) or
// AllHypothesesDegenerate.
EstimationReport estimate_fundamental(std::span<const ImagePoint> points,
                                      std::span<const SmearVector> smears,
                                      const RansacConfig& cfg);

// Selection followed by estimation; fills selected_indices.
EstimationReport estimate_from_field(const SmearField& field, double fraction,
                                     const RansacConfig& cfg);
EstimationReport estimate_from_selection(const Selection& selection,
                                         const RansacConfig& cfg);

// Motion-segmentation mask values.
inline constexpr std::uint8_t kMotionGlobal = 0;
inline constexpr std::uint8_t kMotionLocal = 1;
inline constexpr std::uint8_t kMotionUnknown = 2;

// Per-pixel compatibility with f: local motion where the symmetrized Sampson
// error exceeds tau_seg. Zero-smear pixels with sigma above sigma_gate carry
// no usable motion cue and are marked unknown.
std::vector<std::uint8_t> classify_motion(const SmearField& field,
                                          const FundamentalMatrix& f,
                                          double tau_seg,
                                          double sigma_gate = 1.0);

}  // namespace smearfm
