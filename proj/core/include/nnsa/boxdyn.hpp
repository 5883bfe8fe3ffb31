#pragma once

#include "nnsa/dynsys.hpp"
#include "nnsa/kkt.hpp"
#include "nnsa/matrix.hpp"

namespace nnsa {

/// Limited integrators with per-coordinate lower and upper bounds. With
/// constant input q the equilibrium solves
///   min 0.5*x^T Q x - q^T x  s.t.  lo <= x <= hi.
struct BoxSystem {
    RealMatrix q_mat;  ///< N x N, symmetric positive definite
    RealVector q_vec;  ///< linear term
    RealVector lo;
    RealVector hi;
    double xi = 1.0;   ///< recovery rate outside the box

    /// Validates shape, lo < hi, symmetry, and positive definiteness (by
    /// Cholesky success). Throws std::invalid_argument on violation.
    static BoxSystem build(RealMatrix q_mat, RealVector q_vec, RealVector lo, RealVector hi,
                           double xi = 1.0);

    /// Convenience for bounded least squares: Q = A^T A, q = A^T y.
    static BoxSystem from_least_squares(const RealMatrix& a, const RealVector& y, RealVector lo,
                                        RealVector hi, double xi = 1.0);

    [[nodiscard]] std::size_t dim() const noexcept { return q_vec.size(); }
};

/// Switched right-hand side with xhat = q - Q x:
///   -xi          above the upper bound,
///   min(0, xhat) at the upper bound,
///   xhat         strictly inside,
///   max(0, xhat) at the lower bound,
///   xi           below the lower bound.
[[nodiscard]] RealVector box_rhs(const BoxSystem& sys, const RealVector& x);

/// Projected-Euler integration to the KKT point of the box QP. Uses the same
/// zero-band and exact-bound clamping policy as the non-negative system.
/// Non-convergence within the budget yields converged = false.
[[nodiscard]] SolveResult box_solve(const BoxSystem& sys, const RealVector& x0,
                                    const SolverOptions& opts = {}, Trajectory* traj = nullptr);

[[nodiscard]] inline KktReport box_kkt(const BoxSystem& sys, const RealVector& x) {
    return box_kkt(sys.q_mat, sys.q_vec, sys.lo, sys.hi, x, kZeroTol);
}

}  // namespace nnsa
