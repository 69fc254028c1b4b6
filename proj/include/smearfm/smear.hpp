#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "smearfm/types.hpp"

namespace smearfm {

// Orientation-ambiguous encoding of a smear vector: the angle is doubled so
// s and -s map to the same code while the magnitude is preserved.
struct DoubleAngleVector {
  double u = 0.0;
  double v = 0.0;

  double norm() const;
};

struct SmearSample {
  double u = 0.0;
  double v = 0.0;
  double sigma = 1.0;
};

// Dense per-pixel grid of smear vectors (half-displacements) with predicted
// uncertainties; the network-output surrogate. Row-major, index = y*width+x.
struct SmearField {
  int width = 0;
  int height = 0;
  std::vector<SmearSample> samples;

  const SmearSample& at(int x, int y) const { return samples[static_cast<std::size_t>(y) * width + x]; }
  SmearSample& at(int x, int y) { return samples[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return samples.size(); }
};

struct FlowVector {
  double u = 0.0;
  double v = 0.0;
};

// Dense optical-flow field (full displacements), row-major.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<FlowVector> flow;

  const FlowVector& at(int x, int y) const { return flow[static_cast<std::size_t>(y) * width + x]; }
  FlowVector& at(int x, int y) { return flow[static_cast<std::size_t>(y) * width + x]; }
};

// Per-pixel validity mask from forward/backward flow consistency.
struct CrossCheckMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> mask;

  std::uint8_t at(int x, int y) const { return mask[static_cast<std::size_t>(y) * width + x]; }
};

struct CrossCheckResult {
  std::vector<double> distance;  // row-major, +inf where a warp left the image
  CrossCheckMap map;
};

DoubleAngleVector encode_double_angle(const SmearVector& s);

// Canonical decode with angle in (-pi/2, pi/2]; the caller must treat the
// result as +/- ambiguous.
SmearVector decode_double_angle(const DoubleAngleVector& d);

// Sign-agnostic endpoint error min(||pred - gt||, ||pred + gt||).
double epe_s(const SmearVector& pred, const SmearVector& gt);

// Forward/backward flow consistency. Coordinates are warped by bilinearly
// sampling the flow at non-integer positions; warps leaving the image domain
// force mask = 0 (distance = +inf).
CrossCheckResult cross_check(const FlowField& fw, const FlowField& bw,
                             double eps_cr);

// sigma = softplus(w), always positive.
double sigma_from_raw(double w);

// Gaussian negative log-likelihood of a double-angle prediction:
// ||pred - gt||^2 / (2 sigma^2) + log(sigma^2), sigma = softplus(w).
double loss_gaussian_nll(const DoubleAngleVector& pred,
                         const DoubleAngleVector& gt, double w);

// Cross-check-masked loss: m_cr * L_nll + ReLU((1 - m_cr)/sigma^2 - alpha).
// Valid pixels are supervised; invalid ones push sigma up, with the alpha
// margin stopping unbounded variance growth.
double loss_masked(const DoubleAngleVector& pred, const DoubleAngleVector& gt,
                   double w, int m_cr, double alpha);

struct LossGrad {
  double du = 0.0;  // d/d pred.u
  double dv = 0.0;  // d/d pred.v
  double dw = 0.0;  // d/d w
};

LossGrad loss_gaussian_nll_grad(const DoubleAngleVector& pred,
                                const DoubleAngleVector& gt, double w);
LossGrad loss_masked_grad(const DoubleAngleVector& pred,
                          const DoubleAngleVector& gt, double w, int m_cr,
                          double alpha);

// Sparsification curve: for each fraction f, remove the ceil(f*N) entries
// with the highest sigma (ties: lower index removed first) and report the
// mean of the remaining errors normalized by the full-set mean.
std::vector<std::pair<double, double>> sparsification_curve(
    const std::vector<double>& errors, const std::vector<double>& sigmas,
    const std::vector<double>& fractions);

}  // namespace smearfm
