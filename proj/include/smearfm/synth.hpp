#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "smearfm/image.hpp"
#include "smearfm/smear.hpp"
#include "smearfm/types.hpp"

namespace smearfm {

// Finite projective camera x ~ K (R X + t).
struct CameraPose {
  Mat3 k = Mat3::Identity();
  Mat3 r = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec2 project(const Vec3& point) const;
  double depth(const Vec3& point) const { return (r * point + t)[2]; }
  // Throws ConfigInvalid if r is not a proper rotation or k is singular.
  void validate() const;
};

// Fundamental matrix of an exposure-start/exposure-end camera pair, in the
// convention start^T F end = 0. Throws DegenerateMotion for (near) pure
// rotation.
FundamentalMatrix fundamental_from_poses(const CameraPose& cam_start,
                                         const CameraPose& cam_end);

enum class PointLabel { kGlobal, kLocalMotion, kNoise };

struct SceneConfig {
  int width = 640;
  int height = 480;
  int n_points = 200;
  double noise_sigma_px = 0.0;
  double outlier_fraction = 0.0;
  double local_motion_magnitude = 24.0;
  double flip_probability = 0.5;
  std::uint64_t seed = 0;

  // Dense mode: one point per pixel, anchored so each midpoint sits exactly
  // at its pixel center. Required by flow/field extraction.
  bool grid_mode = false;
  double grid_depth = 6.0;
  double occluder_depth = 3.0;
  bool with_occluder = false;
  std::array<int, 4> occluder_rect = {0, 0, 0, 0};  // x0, y0, x1, y1 (exclusive)
  // Grid mode places local motion in this rectangle instead of a random
  // subset (ignored when empty).
  std::array<int, 4> local_rect = {0, 0, 0, 0};

  // Fixed local-motion displacement direction (unit vector); a seeded random
  // direction is drawn when unset.
  std::optional<Vec2> local_motion_dir;

  // Uncertainty model: sigma = base + slope * injected_noise_magnitude +
  // U(0, jitter), so predicted uncertainty correlates with true error.
  double sigma_base = 0.2;
  double sigma_slope = 1.0;
  double sigma_jitter = 0.05;

  // Pose sampling (ignored when overrides are set): per-axis rotation bound
  // and baseline as a fraction of mean scene depth.
  double max_rotation_deg = 10.0;
  double baseline_fraction_min = 0.02;
  double baseline_fraction_max = 0.10;
  double depth_min = 4.0;
  double depth_max = 10.0;

  std::optional<CameraPose> cam_start_override;
  std::optional<CameraPose> cam_end_override;
};

struct SyntheticScene {
  int width = 0;
  int height = 0;
  bool grid_mode = false;
  CameraPose cam_start;
  CameraPose cam_end;
  std::vector<Vec3> points3d;
  FundamentalMatrix f_gt;
  std::vector<Correspondence> correspondences;     // observed: noisy, flipped
  std::vector<Correspondence> gt_correspondences;  // noiseless, unflipped
  std::vector<PointLabel> labels;
  std::vector<double> sigmas;
};

// Deterministic in (config, seed). Throws ConfigInvalid on bad parameters.
SyntheticScene generate_scene(const SceneConfig& config);

// Ground-truth forward/backward flow pair of a grid-mode scene. The backward
// field is built by splatting end projections into their nearest cell with
// nearest-depth-wins occlusion handling; cells losing that competition (or
// receiving no splat) keep an inconsistent value so cross_check flags them.
// Throws SparseScene unless the scene was generated in grid mode.
std::pair<FlowField, FlowField> flow_pair_from_scene(const SyntheticScene& scene);

// Observed (noisy) per-pixel smears + sigmas of a grid-mode scene.
SmearField smear_field_from_scene(const SyntheticScene& scene);
// Ground-truth smears of a grid-mode scene (sigma fixed at 1).
SmearField gt_field_from_scene(const SyntheticScene& scene);

// Blurry-frame synthesis: per-pixel mean of the frames plus seeded Gaussian
// noise, clamped to [0, 1].
ImageGray frame_average(std::span<const ImageGray> frames, double noise_sigma,
                        std::uint64_t seed);

// Number of intermediate frames needed for smooth blur from the maximum
// smear magnitude: max(ceil(2 * s_max), 15).
int blur_frame_count(double s_max);

}  // namespace smearfm
