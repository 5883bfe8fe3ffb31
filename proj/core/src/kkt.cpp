#include "nnsa/kkt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nnsa {

namespace {

KktReport report_from_primal_dual(const RealVector& x, const RealVector& lambda) {
    KktReport r;
    for (std::size_t i = 0; i < x.size(); ++i) {
        r.primal_violation = std::max(r.primal_violation, -std::min(x[i], 0.0));
        r.dual_violation = std::max(r.dual_violation, -std::min(lambda[i], 0.0));
        r.comp_slack = std::max(r.comp_slack, std::abs(lambda[i] * x[i]));
    }
    r.stationarity = 0.0;  // lambda is defined as A^T A x - A^T y
    r.total = std::max({r.stationarity, r.primal_violation, r.dual_violation, r.comp_slack});
    return r;
}

}  // namespace

KktReport nnls_kkt(const RealMatrix& a, const RealVector& y, const RealVector& x) {
    if (a.rows() != y.size() || a.cols() != x.size()) {
        throw std::invalid_argument("nnls_kkt: dimension mismatch");
    }
    // lambda = A^T (A x - y), evaluated without forming the Gram matrix.
    RealVector residual = matvec(a, x);
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= y[i];
    const RealVector lambda = matvec_transposed(a, residual);
    return report_from_primal_dual(x, lambda);
}

KktReport nnls_kkt_from_gram(const RealMatrix& g, const RealVector& atb, const RealVector& x) {
    if (g.rows() != x.size() || atb.size() != x.size()) {
        throw std::invalid_argument("nnls_kkt_from_gram: dimension mismatch");
    }
    RealVector lambda = matvec(g, x);
    for (std::size_t i = 0; i < lambda.size(); ++i) lambda[i] -= atb[i];
    return report_from_primal_dual(x, lambda);
}

KktReport box_kkt(const RealMatrix& q_mat, const RealVector& q_vec, const RealVector& lo,
                  const RealVector& hi, const RealVector& x, double bound_tol) {
    const std::size_t n = x.size();
    if (q_mat.rows() != n || q_mat.cols() != n || q_vec.size() != n || lo.size() != n ||
        hi.size() != n) {
        throw std::invalid_argument("box_kkt: dimension mismatch");
    }
    RealVector grad = matvec(q_mat, x);
    for (std::size_t i = 0; i < n; ++i) grad[i] -= q_vec[i];

    KktReport r;
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] < lo[i] - bound_tol) {
            r.primal_violation = std::max(r.primal_violation, lo[i] - x[i]);
        } else if (x[i] > hi[i] + bound_tol) {
            r.primal_violation = std::max(r.primal_violation, x[i] - hi[i]);
        } else if (x[i] <= lo[i] + bound_tol) {
            r.dual_violation = std::max(r.dual_violation, std::max(0.0, -grad[i]));
        } else if (x[i] >= hi[i] - bound_tol) {
            r.dual_violation = std::max(r.dual_violation, std::max(0.0, grad[i]));
        } else {
            r.stationarity = std::max(r.stationarity, std::abs(grad[i]));
        }
    }
    r.total = std::max({r.stationarity, r.primal_violation, r.dual_violation, r.comp_slack});
    return r;
}

}  // namespace nnsa
