#pragma once

#include <Eigen/Core>

#include <array>
#include <span>
#include <vector>

#include "smearfm/epipolar.hpp"
#include "smearfm/types.hpp"

namespace smearfm {

using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat79 = Eigen::Matrix<double, 7, 9>;

// Row-major vectorization, so that a^T F b = kron(a, b) . vec(F).
Vec9 vec_row_major(const Mat3& m);
Mat3 unvec_row_major(const Vec9& v);
Vec9 kron_row(const Vec3& a, const Vec3& b);

// 7x9 epipolar constraint matrix; row i is kron(start_i, end_i).
struct ConstraintMatrix {
  Mat79 rows = Mat79::Zero();
};

struct SolverResult {
  FundamentalMatrix f;
  double objective = 0.0;   // ambiguous_objective value at f
  std::array<TimeDirection, 7> directions{};
  bool converged = true;    // false: refinement hit its budget short of the
                            // gradient tolerance; f is the best iterate
};

struct RefineOptions {
  int max_iterations = 100;
  double grad_tol = 1e-10;
};

// Throws ConfigInvalid unless exactly 7 correspondences are given.
ConstraintMatrix build_constraint_rows(std::span<const Correspondence> cs);

// Classical 7-point kernel on a prebuilt constraint matrix: 2D null space,
// det cubic, up to 3 rank-2 unit-norm solutions. Throws
// RankDeficientConstraints when the null space has dimension > 2 (degenerate
// configuration, e.g. collinear points).
std::vector<FundamentalMatrix> seven_point_solutions(const ConstraintMatrix& m);

// Real roots of c3 x^3 + c2 x^2 + c1 x + c0 via companion-matrix
// eigenvalues, keeping roots with relative imaginary part <= 1e-8. Sorted
// ascending. Lower-degree polynomials (leading coefficients ~ 0) are handled.
std::vector<double> real_cubic_roots(double c3, double c2, double c1,
                                     double c0);

// Direction-ambiguous algebraic cost: sum_i min(|start^T F end|,
// |end^T F start|)^2. Exactly invariant under per-smear sign flips and under
// transposing F (bitwise identical branch selection and sums).
double ambiguous_objective(std::span<const Correspondence> cs,
                           const FundamentalMatrix& f);

// Every classical-root candidate over the 64 sign assignments, conditioned
// and mapped back to image coordinates, in deterministic assignment-major
// order. All of them attain (numerically) zero cost on the 7 input smears --
// a minimal tuple is exactly determined under every assignment -- so callers
// holding more data must disambiguate by consensus. Empty when every
// assignment is degenerate.
std::vector<FundamentalMatrix> ambiguous_candidates(
    std::span<const Correspondence> cs);

// Minimal solver on 7 direction-ambiguous smears: enumerates the 64
// non-equivalent sign assignments through the classical 7-point kernel
// (with isotropic coordinate normalization), then polishes the best
// candidates with objective-decreasing projected descent. The returned
// objective never exceeds the exhaustive_sign_search optimum.
SolverResult solve_ambiguous_seven_point(std::span<const Correspondence> cs,
                                         const RefineOptions& opt = {});

// Brute-force reference: evaluates every sign assignment's classical roots
// and returns the objective minimizer, with no refinement. Throws
// AllDegenerate when every assignment is rank-deficient.
SolverResult exhaustive_sign_search(std::span<const Correspondence> cs);

}  // namespace smearfm
