#pragma once

#include "nnsa/matrix.hpp"

namespace nnsa {

/// Optimality certificate for the non-negative least-squares problem
///   min 0.5*||A x - y||^2  s.t.  x >= 0
/// and, with reinterpreted fields, for the box-constrained QP. All entries
/// are infinity norms over the violating coordinates.
struct KktReport {
    double stationarity = 0.0;      ///< |A^T A x - A^T y - lambda|_inf
    double primal_violation = 0.0;  ///< |min(x, 0)|_inf (bound violations for the box QP)
    double dual_violation = 0.0;    ///< |min(lambda, 0)|_inf (sign violations at active bounds)
    double comp_slack = 0.0;        ///< max_i |lambda_i * x_i|
    double total = 0.0;             ///< max of the four components
};

/// Certificate for x against min 0.5*||A x - y||^2 s.t. x >= 0. The
/// multiplier is derived from the primal point as lambda = A^T A x - A^T y,
/// which makes the stationarity component zero by construction.
[[nodiscard]] KktReport nnls_kkt(const RealMatrix& a, const RealVector& y, const RealVector& x);

/// Same certificate evaluated from cached G = A^T A and b = A^T y.
[[nodiscard]] KktReport nnls_kkt_from_gram(const RealMatrix& g, const RealVector& atb,
                                           const RealVector& x);

/// Certificate for x against min 0.5*x^T Q x - q^T x s.t. lo <= x <= hi.
/// With g = Q x - q: interior coordinates contribute |g_i| to stationarity,
/// coordinates at a bound contribute the wrong-signed part of g_i to
/// dual_violation, and coordinates outside the box contribute the overshoot
/// to primal_violation. Membership in "at bound" uses the band `bound_tol`.
[[nodiscard]] KktReport box_kkt(const RealMatrix& q_mat, const RealVector& q_vec,
                                const RealVector& lo, const RealVector& hi, const RealVector& x,
                                double bound_tol = 1e-12);

}  // namespace nnsa
