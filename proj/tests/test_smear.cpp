#include <doctest.h>

#include <cmath>

#include "smearfm/errors.hpp"
#include "smearfm/rng.hpp"
#include "smearfm/smear.hpp"

using namespace smearfm;

TEST_CASE("double-angle encode on the unit cases") {
  const DoubleAngleVector a = encode_double_angle({1.0, 0.0});
  CHECK(a.u == doctest::Approx(1.0));
  CHECK(a.v == doctest::Approx(0.0));

  const DoubleAngleVector b = encode_double_angle({0.0, 1.0});
  CHECK(b.u == doctest::Approx(-1.0));
  CHECK(std::abs(b.v) <= 1e-15);

  const DoubleAngleVector c = encode_double_angle({1.0, 1.0});
  CHECK(std::abs(c.u) <= 1e-15);
  CHECK(c.v == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  const DoubleAngleVector z = encode_double_angle({0.0, 0.0});
  CHECK(z.u == 0.0);
  CHECK(z.v == 0.0);
}

TEST_CASE("double-angle decode on the unit cases") {
  const SmearVector a = decode_double_angle({1.0, 0.0});
  CHECK(a.u == doctest::Approx(1.0));
  CHECK(a.v == doctest::Approx(0.0));

  const SmearVector b = decode_double_angle({-1.0, 0.0});
  CHECK(std::abs(b.u) <= 1e-12);
  CHECK(b.v == doctest::Approx(1.0));

  const SmearVector z = decode_double_angle({0.0, 0.0});
  CHECK(z.u == 0.0);
  CHECK(z.v == 0.0);
}

TEST_CASE("double-angle codec properties") {
  Rng rng(21);
  for (int trial = 0; trial < 10000; ++trial) {
    const SmearVector s{rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)};
    const DoubleAngleVector enc = encode_double_angle(s);
    const DoubleAngleVector enc_neg = encode_double_angle(s.negated());
    CHECK(enc.u == enc_neg.u);  // bitwise: only even monomials appear
    CHECK(enc.v == enc_neg.v);
    CHECK(enc.norm() == doctest::Approx(s.norm()).epsilon(1e-12));
    CHECK(epe_s(decode_double_angle(enc), s) <= 1e-9);
  }
}

TEST_CASE("sign-agnostic endpoint error") {
  CHECK(epe_s({3.0, -2.0}, {3.0, -2.0}) == 0.0);
  CHECK(epe_s({3.0, -2.0}, {-3.0, 2.0}) == 0.0);
  CHECK(epe_s({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(std::sqrt(2.0)));

  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const SmearVector a{rng.normal(), rng.normal()};
    const SmearVector b{rng.normal(), rng.normal()};
    CHECK(epe_s(a, b) == epe_s(b, a));
    CHECK(epe_s(a, b) >= 0.0);
  }
}

namespace {

FlowField constant_flow(int w, int h, double u, double v) {
  FlowField f;
  f.width = w;
  f.height = h;
  f.flow.assign(static_cast<std::size_t>(w) * h, {u, v});
  return f;
}

}  // namespace

TEST_CASE("cross-check: zero flows are all-valid") {
  const FlowField z = constant_flow(16, 10, 0.0, 0.0);
  const CrossCheckResult r = cross_check(z, z, 1.0);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 16; ++x) {
      CHECK(r.distance[y * 16 + x] == 0.0);
      CHECK(r.map.at(x, y) == 1);
    }
  }
}

TEST_CASE("cross-check: mutually inverse constant flows") {
  const int w = 20, h = 12;
  const FlowField fw = constant_flow(w, h, 5.0, 0.0);
  const FlowField bw = constant_flow(w, h, -5.0, 0.0);
  const CrossCheckResult r = cross_check(fw, bw, 1.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x >= 5 && x <= w - 6) {
        CHECK(r.distance[y * w + x] == 0.0);
        CHECK(r.map.at(x, y) == 1);
      } else {
        CHECK(r.map.at(x, y) == 0);  // a warp leaves the domain
      }
    }
  }
}

TEST_CASE("cross-check: one-sided flow fails everywhere") {
  const int w = 20, h = 12;
  const FlowField fw = constant_flow(w, h, 5.0, 0.0);
  const FlowField bw = constant_flow(w, h, 0.0, 0.0);
  const CrossCheckResult r = cross_check(fw, bw, 1.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x <= w - 6) CHECK(r.distance[y * w + x] == doctest::Approx(10.0));
      CHECK(r.map.at(x, y) == 0);
    }
  }
}

TEST_CASE("cross-check rejects mismatched fields") {
  CHECK_THROWS_AS(cross_check(constant_flow(4, 4, 0, 0), constant_flow(5, 4, 0, 0), 1.0),
                  DimensionMismatch);
}

TEST_CASE("gaussian NLL loss values") {
  const DoubleAngleVector g{0.3, -0.8};
  // sigma = 1  <=>  w = log(e - 1)
  const double w1 = std::log(std::exp(1.0) - 1.0);
  CHECK(loss_gaussian_nll(g, g, w1) == doctest::Approx(0.0).epsilon(1e-12));
  // sigma = e gives log(e^2) = 2
  const double we = std::log(std::exp(std::exp(1.0)) - 1.0);
  CHECK(loss_gaussian_nll(g, g, we) == doctest::Approx(2.0).epsilon(1e-9));
  // squared residual 2 at sigma = 1
  const DoubleAngleVector p{g.u + 1.0, g.v + 1.0};
  CHECK(loss_gaussian_nll(p, g, w1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("masked loss values") {
  const DoubleAngleVector g{0.5, 0.25};
  const DoubleAngleVector p{1.5, -0.75};
  const double w = 0.7;
  const double alpha = 0.01;
  // valid pixel: identical to the plain NLL
  CHECK(loss_masked(p, g, w, 1, alpha) == loss_gaussian_nll(p, g, w));
  // invalid pixel at the margin boundary sigma^2 = 1/alpha
  const double w_margin = std::log(std::exp(1.0 / std::sqrt(alpha)) - 1.0);
  CHECK(loss_masked(p, g, w_margin, 0, alpha) == doctest::Approx(0.0).epsilon(1e-9));
  // invalid pixel, sigma = 1
  const double w1 = std::log(std::exp(1.0) - 1.0);
  CHECK(loss_masked(p, g, w1, 0, alpha) == doctest::Approx(0.99).epsilon(1e-12));
}

namespace {

template <typename Loss>
void check_gradient(Loss loss, const DoubleAngleVector& pred,
                    const DoubleAngleVector& gt, double w, const LossGrad& g) {
  const double h = 1e-5;
  const double du = (loss({pred.u + h, pred.v}, gt, w) - loss({pred.u - h, pred.v}, gt, w)) / (2 * h);
  const double dv = (loss({pred.u, pred.v + h}, gt, w) - loss({pred.u, pred.v - h}, gt, w)) / (2 * h);
  const double dw = (loss(pred, gt, w + h) - loss(pred, gt, w - h)) / (2 * h);
  CHECK(g.du == doctest::Approx(du).epsilon(1e-5));
  CHECK(g.dv == doctest::Approx(dv).epsilon(1e-5));
  CHECK(g.dw == doctest::Approx(dw).epsilon(1e-5));
}

}  // namespace

TEST_CASE("loss gradients match finite differences") {
  Rng rng(23);
  const double alpha = 0.01;
  int checked = 0;
  while (checked < 300) {
    const DoubleAngleVector pred{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    const DoubleAngleVector gt{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    const double w = rng.uniform(-2.0, 3.0);
    const int m = rng.uniform() < 0.5 ? 1 : 0;
    const double sigma = sigma_from_raw(w);
    // keep away from the ReLU kink
    if (m == 0 && std::abs(1.0 / (sigma * sigma) - alpha) <= 1e-3) continue;

    check_gradient([](const DoubleAngleVector& p, const DoubleAngleVector& g,
                      double ww) { return loss_gaussian_nll(p, g, ww); },
                   pred, gt, w, loss_gaussian_nll_grad(pred, gt, w));
    check_gradient([&](const DoubleAngleVector& p, const DoubleAngleVector& g,
                       double ww) { return loss_masked(p, g, ww, m, alpha); },
                   pred, gt, w, loss_masked_grad(pred, gt, w, m, alpha));
    ++checked;
  }
}

TEST_CASE("sparsification curve basics") {
  SUBCASE("fraction zero normalizes to exactly one") {
    const auto curve = sparsification_curve({1.0, 5.0, 2.0}, {0.1, 0.9, 0.5}, {0.0});
    CHECK(curve.size() == 1);
    CHECK(curve[0].second == 1.0);
  }
  SUBCASE("hand-computed two-element case") {
    const auto curve = sparsification_curve({4.0, 2.0}, {1.0, 2.0}, {0.5});
    CHECK(curve[0].second == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("well-ordered errors give a non-increasing curve") {
    std::vector<double> errors, sigmas, fractions;
    for (int i = 0; i < 100; ++i) {
      errors.push_back(i * 0.1);
      sigmas.push_back(i * 0.01);
    }
    for (int i = 0; i < 10; ++i) fractions.push_back(0.1 * i);
    const auto curve = sparsification_curve(errors, sigmas, fractions);
    for (std::size_t i = 1; i < curve.size(); ++i) {
      CHECK(curve[i].second <= curve[i - 1].second + 1e-15);
    }
  }
  SUBCASE("empty input throws") {
    CHECK_THROWS_AS(sparsification_curve({}, {}, {0.0}), EmptyInput);
  }
}
