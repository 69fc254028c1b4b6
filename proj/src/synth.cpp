#include "smearfm/synth.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smearfm/epipolar.hpp"
#include "smearfm/errors.hpp"
#include "smearfm/rng.hpp"

namespace smearfm {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0;
  return s;
}

Mat3 rotation_xyz(double rx, double ry, double rz) {
  const Eigen::AngleAxisd ax(rx, Vec3::UnitX());
  const Eigen::AngleAxisd ay(ry, Vec3::UnitY());
  const Eigen::AngleAxisd az(rz, Vec3::UnitZ());
  return (az * ay * ax).toRotationMatrix();
}

}  // namespace

Vec2 CameraPose::project(const Vec3& point) const {
  const Vec3 cam = r * point + t;
  const Vec3 img = k * cam;
  return {img[0] / img[2], img[1] / img[2]};
}

void CameraPose::validate() const {
  if ((r.transpose() * r - Mat3::Identity()).norm() > 1e-9 ||
      std::abs(r.determinant() - 1.0) > 1e-9) {
    throw ConfigInvalid("CameraPose: r is not a proper rotation");
  }
  if (std::abs(k.determinant()) < 1e-12) {
    throw ConfigInvalid("CameraPose: k is singular");
  }
}

FundamentalMatrix fundamental_from_poses(const CameraPose& cam_start,
                                         const CameraPose& cam_end) {
  const Mat3 r_rel = cam_end.r * cam_start.r.transpose();
  const Vec3 t_rel = cam_end.t - r_rel * cam_start.t;
  if (t_rel.norm() <= 1e-9) {
    throw DegenerateMotion("fundamental_from_poses: zero baseline (pure rotation)");
  }
  // end^T (K_e^-T [t]x R K_s^-1) start = 0; transpose to the start-on-the-left
  // convention used throughout.
  const Mat3 f_end_start = cam_end.k.inverse().transpose() * skew(t_rel) *
                           r_rel * cam_start.k.inverse();
  return normalize_rank2(f_end_start.transpose());
}

namespace {

struct RectMask {
  std::array<int, 4> rect;
  bool contains(int x, int y) const {
    return x >= rect[0] && x < rect[2] && y >= rect[1] && y < rect[3];
  }
  bool empty() const { return rect[2] <= rect[0] || rect[3] <= rect[1]; }
};

CameraPose default_start_camera(const SceneConfig& cfg) {
  CameraPose cam;
  cam.k << 0.8 * cfg.width, 0.0, 0.5 * cfg.width,
           0.0, 0.8 * cfg.width, 0.5 * cfg.height,
           0.0, 0.0, 1.0;
  return cam;
}

CameraPose sample_end_camera(const SceneConfig& cfg, const CameraPose& start,
                             Rng& rng) {
  const double rad = cfg.max_rotation_deg * M_PI / 180.0;
  const double rx = rng.uniform(-rad, rad);
  const double ry = rng.uniform(-rad, rad);
  const double rz = rng.uniform(-rad, rad);
  const double mean_depth = 0.5 * (cfg.depth_min + cfg.depth_max);
  const double baseline =
      rng.uniform(cfg.baseline_fraction_min, cfg.baseline_fraction_max) * mean_depth;
  // Keep a depth component in the baseline: a purely lateral translation
  // puts the epipole at infinity and makes all epipolar lines parallel, a
  // near-degenerate geometry for separating coherent local motion.
  Vec3 dir(rng.normal(), rng.normal(), rng.normal());
  while (dir.norm() < 1e-6 || std::abs(dir.normalized()[2]) < 0.75) {
    dir = Vec3(rng.normal(), rng.normal(), rng.normal());
  }
  dir.normalize();

  CameraPose cam;
  cam.k = start.k;
  cam.r = rotation_xyz(rx, ry, rz) * start.r;
  cam.t = start.t + baseline * dir;
  return cam;
}

Vec3 backproject(const CameraPose& cam, const Vec2& pixel, double depth) {
  const Vec3 ray = cam.k.inverse() * Vec3(pixel[0], pixel[1], 1.0);
  const Vec3 cam_point = ray * (depth / ray[2]);
  return cam.r.transpose() * (cam_point - cam.t);
}

void validate_config(const SceneConfig& cfg) {
  if (cfg.width <= 0 || cfg.height <= 0) throw ConfigInvalid("scene: non-positive dimensions");
  if (!cfg.grid_mode && cfg.n_points < 7) throw ConfigInvalid("scene: n_points < 7");
  if (cfg.noise_sigma_px < 0.0) throw ConfigInvalid("scene: negative noise sigma");
  if (cfg.outlier_fraction < 0.0 || cfg.outlier_fraction >= 1.0) {
    throw ConfigInvalid("scene: outlier_fraction outside [0, 1)");
  }
  if (cfg.flip_probability < 0.0 || cfg.flip_probability > 1.0) {
    throw ConfigInvalid("scene: flip_probability outside [0, 1]");
  }
  if (cfg.depth_min <= 0.0 || cfg.depth_max < cfg.depth_min) {
    throw ConfigInvalid("scene: bad depth range");
  }
}

}  // namespace

SyntheticScene generate_scene(const SceneConfig& cfg) {
  validate_config(cfg);
  Rng root(cfg.seed);
  Rng rng_pose = root.split(0);
  Rng rng_points = root.split(1);
  Rng rng_outlier = root.split(2);
  Rng rng_noise = root.split(3);
  Rng rng_flip = root.split(4);
  Rng rng_sigma = root.split(5);

  SyntheticScene scene;
  scene.width = cfg.width;
  scene.height = cfg.height;
  scene.grid_mode = cfg.grid_mode;
  scene.cam_start = cfg.cam_start_override.value_or(default_start_camera(cfg));
  scene.cam_end = cfg.cam_end_override.value_or(
      sample_end_camera(cfg, scene.cam_start, rng_pose));
  scene.cam_start.validate();
  scene.cam_end.validate();
  scene.f_gt = fundamental_from_poses(scene.cam_start, scene.cam_end);

  Vec2 local_dir;
  if (cfg.local_motion_dir) {
    local_dir = cfg.local_motion_dir->normalized();
  } else {
    const double phi = rng_outlier.uniform(0.0, 2.0 * M_PI);
    local_dir = {std::cos(phi), std::sin(phi)};
  }
  const Vec2 local_disp = cfg.local_motion_magnitude * local_dir;

  // Per-point true start/end projections plus labels.
  std::vector<Vec2> starts, ends;
  if (cfg.grid_mode) {
    const RectMask local{cfg.local_rect};
    const RectMask occluder{cfg.occluder_rect};
    const std::size_t n = static_cast<std::size_t>(cfg.width) * cfg.height;
    scene.points3d.resize(n);
    starts.resize(n);
    ends.resize(n);
    scene.labels.assign(n, PointLabel::kGlobal);
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        const std::size_t idx = static_cast<std::size_t>(y) * cfg.width + x;
        const double depth = (cfg.with_occluder && !occluder.empty() &&
                              occluder.contains(x, y))
                                 ? cfg.occluder_depth
                                 : cfg.grid_depth;
        const bool is_local = !local.empty() && local.contains(x, y);
        const Vec2 center(x + 0.5, y + 0.5);
        // Anchor the MIDPOINT at the pixel center: fixed-point iteration on
        // the start projection so (start + end)/2 lands on the center.
        Vec2 xs = center;
        Vec3 point;
        Vec2 xe;
        for (int iter = 0; iter < 10; ++iter) {
          point = backproject(scene.cam_start, xs, depth);
          xe = scene.cam_end.project(point);
          if (is_local) xe += local_disp;
          const Vec2 mid = 0.5 * (xs + xe);
          xs -= (mid - center);
        }
        scene.points3d[idx] = point;
        starts[idx] = xs;
        ends[idx] = xe;
        if (is_local) scene.labels[idx] = PointLabel::kLocalMotion;
      }
    }
  } else {
    const int n = cfg.n_points;
    const double margin = 4.0;
    scene.labels.assign(n, PointLabel::kGlobal);
    starts.resize(n);
    ends.resize(n);
    scene.points3d.resize(n);
    for (int i = 0; i < n; ++i) {
      bool placed = false;
      for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        const Vec2 pix(rng_points.uniform(margin, cfg.width - margin),
                       rng_points.uniform(margin, cfg.height - margin));
        const double depth = rng_points.uniform(cfg.depth_min, cfg.depth_max);
        const Vec3 point = backproject(scene.cam_start, pix, depth);
        if (scene.cam_end.depth(point) <= 0.0) continue;
        const Vec2 pe = scene.cam_end.project(point);
        if (pe[0] < margin || pe[0] > cfg.width - margin || pe[1] < margin ||
            pe[1] > cfg.height - margin) {
          continue;
        }
        scene.points3d[i] = point;
        starts[i] = pix;
        ends[i] = pe;
        placed = true;
      }
      if (!placed) {
        throw ConfigInvalid("scene: could not place points visible in both views");
      }
    }
    // Replace an exact fraction with local-motion points. The budget is
    // split across a few independently moving rigid clusters, each with its
    // own displacement direction; a single coherent displacement would admit
    // its own exact epipolar geometry (compose F with the image translation)
    // and make the scene inseparable by consensus.
    const auto n_out = static_cast<std::size_t>(
        std::llround(cfg.outlier_fraction * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t n_clusters =
        cfg.local_motion_dir ? 1 : std::max<std::size_t>(1, std::min<std::size_t>(4, n_out / 15));
    std::vector<Vec2> cluster_disp(n_clusters, local_disp);
    for (std::size_t c = 1; c < n_clusters; ++c) {
      const double phi = rng_outlier.uniform(0.0, 2.0 * M_PI);
      cluster_disp[c] = cfg.local_motion_magnitude * Vec2(std::cos(phi), std::sin(phi));
    }
    for (std::size_t k = 0; k < n_out; ++k) {
      const std::size_t j = k + rng_outlier.below(order.size() - k);
      std::swap(order[k], order[j]);
      const std::size_t idx = order[k];
      ends[idx] += cluster_disp[k % n_clusters];
      scene.labels[idx] = PointLabel::kLocalMotion;
    }
  }

  // Noiseless truth, then observed smears: endpoint noise first, midpoint +
  // half-displacement after, then sign flips. Sigma tracks the injected
  // noise magnitude.
  const std::size_t n = starts.size();
  scene.gt_correspondences.resize(n);
  scene.correspondences.resize(n);
  scene.sigmas.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 mid_gt = 0.5 * (starts[i] + ends[i]);
    const Vec2 half_gt = 0.5 * (ends[i] - starts[i]);
    scene.gt_correspondences[i] = {{mid_gt[0], mid_gt[1]}, {half_gt[0], half_gt[1]}};

    const Vec2 noise_s(rng_noise.normal(0.0, cfg.noise_sigma_px),
                       rng_noise.normal(0.0, cfg.noise_sigma_px));
    const Vec2 noise_e(rng_noise.normal(0.0, cfg.noise_sigma_px),
                       rng_noise.normal(0.0, cfg.noise_sigma_px));
    const Vec2 s = starts[i] + noise_s;
    const Vec2 e = ends[i] + noise_e;
    Vec2 mid = 0.5 * (s + e);
    Vec2 half = 0.5 * (e - s);
    if (rng_flip.uniform() < cfg.flip_probability) half = -half;
    scene.correspondences[i] = {{mid[0], mid[1]}, {half[0], half[1]}};

    const double noise_mag = 0.5 * (noise_s.norm() + noise_e.norm());
    scene.sigmas[i] = cfg.sigma_base + cfg.sigma_slope * noise_mag +
                      rng_sigma.uniform(0.0, cfg.sigma_jitter);
  }
  return scene;
}

std::pair<FlowField, FlowField> flow_pair_from_scene(const SyntheticScene& scene) {
  if (!scene.grid_mode) {
    throw SparseScene("flow_pair_from_scene: scene lacks dense grid coverage");
  }
  const int w = scene.width, h = scene.height;
  FlowField fw, bw;
  fw.width = bw.width = w;
  fw.height = bw.height = h;
  // Unsplatted backward cells keep a far-out-of-frame value so the
  // cross-check warp leaves the domain and the pixel is flagged invalid.
  constexpr double kInconsistent = 1e9;
  fw.flow.assign(static_cast<std::size_t>(w) * h, {0.0, 0.0});
  bw.flow.assign(static_cast<std::size_t>(w) * h, {kInconsistent, kInconsistent});

  std::vector<double> best_depth(static_cast<std::size_t>(w) * h, 0.0);
  std::vector<std::uint8_t> splatted(best_depth.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      const Correspondence& gt = scene.gt_correspondences[idx];
      const Vec3 s = gt.start();
      const Vec3 e = gt.end();
      fw.at(x, y) = {e[0] - s[0], e[1] - s[1]};

      // Splat backward flow at the end-image cell; nearer depth wins.
      const int cx = static_cast<int>(std::llround(e[0] - 0.5));
      const int cy = static_cast<int>(std::llround(e[1] - 0.5));
      if (cx < 0 || cx >= w || cy < 0 || cy >= h) continue;
      const double depth = scene.cam_end.depth(scene.points3d[idx]);
      const std::size_t cell = static_cast<std::size_t>(cy) * w + cx;
      if (!splatted[cell] || depth < best_depth[cell]) {
        bw.flow[cell] = {s[0] - e[0], s[1] - e[1]};
        best_depth[cell] = depth;
        splatted[cell] = 1;
      }
    }
  }
  return {fw, bw};
}

SmearField smear_field_from_scene(const SyntheticScene& scene) {
  if (!scene.grid_mode) {
    throw SparseScene("smear_field_from_scene: scene lacks dense grid coverage");
  }
  SmearField field;
  field.width = scene.width;
  field.height = scene.height;
  field.samples.resize(scene.correspondences.size());
  for (std::size_t i = 0; i < field.samples.size(); ++i) {
    const auto& c = scene.correspondences[i];
    field.samples[i] = {c.half_smear.u, c.half_smear.v, scene.sigmas[i]};
  }
  return field;
}

SmearField gt_field_from_scene(const SyntheticScene& scene) {
  if (!scene.grid_mode) {
    throw SparseScene("gt_field_from_scene: scene lacks dense grid coverage");
  }
  SmearField field;
  field.width = scene.width;
  field.height = scene.height;
  field.samples.resize(scene.gt_correspondences.size());
  for (std::size_t i = 0; i < field.samples.size(); ++i) {
    const auto& c = scene.gt_correspondences[i];
    field.samples[i] = {c.half_smear.u, c.half_smear.v, 1.0};
  }
  return field;
}

ImageGray frame_average(std::span<const ImageGray> frames, double noise_sigma,
                        std::uint64_t seed) {
  if (frames.empty()) throw EmptyInput("frame_average: no frames");
  const int w = frames[0].width, h = frames[0].height;
  for (const auto& f : frames) {
    if (f.width != w || f.height != h) {
      throw DimensionMismatch("frame_average: frame size mismatch");
    }
  }
  ImageGray out(w, h);
  const double inv = 1.0 / static_cast<double>(frames.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < out.px.size(); ++i) {
    double sum = 0.0;
    for (const auto& f : frames) sum += f.px[i];
    double v = sum * inv;
    if (noise_sigma > 0.0) v += rng.normal(0.0, noise_sigma);
    out.px[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

int blur_frame_count(double s_max) {
  if (s_max < 0.0) throw ConfigInvalid("blur_frame_count: negative smear magnitude");
  return std::max(static_cast<int>(std::ceil(2.0 * s_max)), 15);
}

}  // namespace smearfm
