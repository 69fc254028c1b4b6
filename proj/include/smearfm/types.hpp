#pragma once

#include <Eigen/Core>
#include <cmath>

namespace smearfm {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

// Which endpoint of a smear is the exposure-start projection. StartToEnd
// means (midpoint - half_smear) is the start; EndToStart means the smear is
// traversed the other way.
enum class TimeDirection { kStartToEnd, kEndToStart };

struct ImagePoint {
  double x = 0.0;
  double y = 0.0;
};

// 2D smear vector in pixels. Zero is legal and denotes no smear.
struct SmearVector {
  double u = 0.0;
  double v = 0.0;

  double norm() const { return std::hypot(u, v); }
  SmearVector negated() const { return {-u, -v}; }
};

// A smear path stored as its midpoint plus HALF the endpoint displacement,
// so the endpoints are midpoint +/- half_smear. (midpoint, half_smear) and
// (midpoint, -half_smear) describe the same physical smear.
struct Correspondence {
  ImagePoint midpoint;
  SmearVector half_smear;

  // Homogeneous endpoints. start() pairs with end() as the two exposure
  // instants under the StartToEnd assignment.
  Vec3 start() const {
    return {midpoint.x - half_smear.u, midpoint.y - half_smear.v, 1.0};
  }
  Vec3 end() const {
    return {midpoint.x + half_smear.u, midpoint.y + half_smear.v, 1.0};
  }
  Correspondence flipped() const { return {midpoint, half_smear.negated()}; }
};

// 3x3 fundamental matrix, row-major semantics. Canonical instances (those
// produced by normalize_rank2) have det = 0 and unit Frobenius norm; the
// matrix is only ever determined up to a transpose by single-frame smears.
struct FundamentalMatrix {
  Mat3 m = Mat3::Zero();

  FundamentalMatrix transposed() const {
    FundamentalMatrix t;
    t.m = m.transpose();
    return t;
  }
};

// Homogeneous line a*x + b*y + c = 0.
struct EpipolarLine {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

inline Vec3 homogenize(const ImagePoint& p) { return {p.x, p.y, 1.0}; }

}  // namespace smearfm
