#pragma once

#include <stdexcept>
#include <vector>

#include "nnsa/boxdyn.hpp"
#include "nnsa/dynsys.hpp"
#include "nnsa/matrix.hpp"

namespace nnsa {

/// Thrown when the active-set method exceeds its iteration cap.
class CyclingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Active-set method for min 0.5*||A x - y||^2 s.t. x >= 0 (Lawson-Hanson).
/// Terminates finitely with exact zeros on the passive set and an exactly
/// complementary dual estimate: lambda_eq is zero on the positive set and
/// x is zero off it, so lambda_i * x_i == 0 to the bit. Inner least-squares
/// solves use Cholesky on the Gram block of the positive set.
/// `max_iterations` 0 selects 10*N + 50. Throws CyclingError past the cap.
[[nodiscard]] SolveResult nnls_active_set(const RealMatrix& a, const RealVector& y,
                                          double tol = 1e-10, std::size_t max_iterations = 0);

struct ProxOptions {
    double tol = 1e-8;             ///< infinity norm of the successive-iterate change
    std::size_t max_iters = 50000;
};

struct ProxResult {
    RealVector x;
    std::size_t iters = 0;
    bool hit_iteration_cap = false;  ///< best iterate returned, warning flag
};

/// Projected proximal gradient for min 0.5*||A x - y||^2 + alpha*sum(x)
/// s.t. x >= 0: the fixed point of x <- max(0, x - s*(A^T A x - A^T y +
/// alpha)), with step s = 1/L, L the Gershgorin bound on the largest
/// eigenvalue of A^T A. Monotone in the objective.
[[nodiscard]] ProxResult nnbpdn_prox(const RealMatrix& a, const RealVector& y, double alpha,
                                     const ProxOptions& opts = {},
                                     const RealVector* warm_start = nullptr);

/// Same iteration from cached G = A^T A and b = A^T y.
[[nodiscard]] ProxResult nnbpdn_prox_gram(const RealMatrix& g, const RealVector& atb, double alpha,
                                          const ProxOptions& opts = {},
                                          const RealVector* warm_start = nullptr);

struct NnbpdnPath {
    std::vector<double> alphas;        ///< strictly descending
    std::vector<RealVector> solutions; ///< component-wise non-negative
    std::vector<bool> hit_cap;         ///< per-alpha iteration-cap warnings
};

/// Regularization path over n_alphas (>= 2) logarithmically spaced values
/// from alpha_max = |A^T y|_inf down to alpha_max * 1e-4, solved in
/// descending order with warm starts. At alpha_max the solution is the zero
/// vector.
[[nodiscard]] NnbpdnPath nnbpdn_path(const RealMatrix& a, const RealVector& y,
                                     std::size_t n_alphas, const ProxOptions& opts = {});

/// Projected gradient for the box QP: x <- clip(x - s*(Q x - q), lo, hi),
/// s = 1/L from the Gershgorin bound on Q. Converged when the unit-step
/// projected gradient |x - clip(x - g, lo, hi)|_inf falls below opts.tol.
[[nodiscard]] SolveResult box_projected_gradient(const BoxSystem& sys, const ProxOptions& opts = {});

}  // namespace nnsa
