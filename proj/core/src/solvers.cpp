#include "nnsa/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "nnsa/kkt.hpp"
#include "nnsa/linalg.hpp"

namespace nnsa {

SolveResult nnls_active_set(const RealMatrix& a, const RealVector& y, double tol,
                            std::size_t max_iterations) {
    if (a.rows() != y.size()) throw std::invalid_argument("nnls_active_set: dimension mismatch");
    const auto wall_start = std::chrono::steady_clock::now();
    const std::size_t n = a.cols();
    if (max_iterations == 0) max_iterations = 10 * n + 50;

    const RealMatrix g = gram(a);
    const RealVector b = matvec_transposed(a, y);

    RealVector x(n, 0.0);
    RealVector w = b;  // dual b - G x; kept exactly zero on the positive set
    std::vector<std::size_t> pset;
    std::vector<bool> in_p(n, false);
    std::size_t iterations = 0;
    std::size_t moves = 0;

    auto refresh_dual = [&] {
        const RealVector gx = matvec(g, x);
        for (std::size_t i = 0; i < n; ++i) w[i] = in_p[i] ? 0.0 : b[i] - gx[i];
    };

    auto solve_on_pset = [&]() -> std::optional<RealVector> {
        const RealMatrix gpp = submatrix(g, pset, pset);
        const auto chol = Cholesky::factor(gpp);
        if (!chol) return std::nullopt;
        RealVector bp(pset.size());
        for (std::size_t k = 0; k < pset.size(); ++k) bp[k] = b[pset[k]];
        return chol->solve(bp);
    };

    while (true) {
        // candidate with the largest positive dual among the passive set
        std::size_t best = n;
        double wmax = tol;
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_p[i] && w[i] > wmax) {
                wmax = w[i];
                best = i;
            }
        }
        if (best == n) break;  // dual feasible within tol

        in_p[best] = true;
        pset.push_back(best);
        ++moves;

        auto z = solve_on_pset();
        if (!z) {
            // nearly dependent column: reject the candidate for this pass
            in_p[best] = false;
            pset.pop_back();
            w[best] = 0.0;
            --moves;
            continue;
        }

        while (true) {
            if (++iterations > max_iterations) {
                throw CyclingError("nnls_active_set: iteration cap exceeded (" +
                                   std::to_string(a.rows()) + "x" + std::to_string(n) + ")");
            }
            bool feasible = true;
            double alpha = 2.0;
            std::size_t blocker = pset.size();
            for (std::size_t k = 0; k < pset.size(); ++k) {
                if ((*z)[k] <= 0.0) {
                    feasible = false;
                    const double xi = x[pset[k]];
                    const double t = xi > 0.0 ? xi / (xi - (*z)[k]) : 0.0;
                    if (t < alpha) {
                        alpha = t;
                        blocker = k;
                    }
                }
            }
            if (feasible) {
                for (std::size_t k = 0; k < pset.size(); ++k) x[pset[k]] = (*z)[k];
                break;
            }
            // interpolate to the first blocking bound, then drop pinned indices
            for (std::size_t k = 0; k < pset.size(); ++k) {
                const std::size_t i = pset[k];
                x[i] += alpha * ((*z)[k] - x[i]);
            }
            std::vector<std::size_t> keep;
            keep.reserve(pset.size());
            for (std::size_t k = 0; k < pset.size(); ++k) {
                const std::size_t i = pset[k];
                if (k == blocker || x[i] <= 0.0) {
                    x[i] = 0.0;
                    in_p[i] = false;
                    ++moves;
                } else {
                    keep.push_back(i);
                }
            }
            pset = std::move(keep);
            if (pset.empty()) {
                z.reset();
                break;
            }
            z = solve_on_pset();
            if (!z) {
                throw CyclingError("nnls_active_set: singular Gram block after a drop");
            }
        }
        refresh_dual();
    }

    SolveResult res;
    res.lambda_eq = RealVector(n);
    for (std::size_t i = 0; i < n; ++i) res.lambda_eq[i] = -w[i];
    res.kkt_residual = nnls_kkt_from_gram(g, b, x).total;
    res.x_eq = std::move(x);
    res.switches = moves;
    res.steps = iterations;
    res.converged = res.kkt_residual <= tol;
    res.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return res;
}

namespace {

/// Attempts the closed-form fixed point on the current support: solves the
/// positive-set normal equations, then accepts the candidate only if one
/// application of the proximal map moves it by no more than `tol` (the
/// solver's own stopping rule). Returns false when the support guess is
/// wrong or its Gram block is not safely positive definite.
bool try_support_fixed_point(const RealMatrix& g, const RealVector& atb, double alpha, double step,
                             double tol, RealVector& x, RealVector& grad) {
    const std::size_t n = x.size();
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > 0.0) support.push_back(i);
    }
    if (support.empty()) return false;
    const auto chol = Cholesky::factor(submatrix(g, support, support));
    if (!chol) return false;
    RealVector rhs(support.size());
    for (std::size_t k = 0; k < support.size(); ++k) rhs[k] = atb[support[k]] - alpha;
    const RealVector zs = chol->solve(rhs);
    for (std::size_t k = 0; k < support.size(); ++k) {
        if (!(zs[k] > 0.0)) return false;
    }
    RealVector cand(n, 0.0);
    for (std::size_t k = 0; k < support.size(); ++k) cand[support[k]] = zs[k];
    RealVector gcand(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = -atb[i];
        const double* row = g.data() + i * n;
        for (std::size_t k = 0; k < support.size(); ++k) acc += row[support[k]] * zs[k];
        gcand[i] = acc;
    }
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double nx = std::max(0.0, cand[i] - step * (gcand[i] + alpha));
        delta = std::max(delta, std::abs(nx - cand[i]));
    }
    if (delta > tol) return false;
    x = std::move(cand);
    grad = std::move(gcand);
    return true;
}

}  // namespace

ProxResult nnbpdn_prox_gram(const RealMatrix& g, const RealVector& atb, double alpha,
                            const ProxOptions& opts, const RealVector* warm_start) {
    const std::size_t n = atb.size();
    if (g.rows() != n || g.cols() != n) throw std::invalid_argument("nnbpdn_prox: bad Gram matrix");
    if (!(alpha > 0.0)) throw std::invalid_argument("nnbpdn_prox: alpha must be positive");
    if (warm_start && warm_start->size() != n) {
        throw std::invalid_argument("nnbpdn_prox: warm start length mismatch");
    }
    const double step = 1.0 / std::max(gershgorin_max_eigenvalue(g), 1e-300);

    ProxResult res;
    res.x = warm_start ? *warm_start : RealVector(n, 0.0);
    RealVector& x = res.x;

    RealVector grad(n);
    auto refresh_grad = [&] {
        const double* gp = g.data();
        for (std::size_t i = 0; i < n; ++i) {
            double acc = -atb[i];
            const double* row = gp + i * n;
            for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
            grad[i] = acc;
        }
    };
    refresh_grad();

    std::vector<std::pair<std::size_t, double>> moved;
    bool converged = false;
    while (res.iters < opts.max_iters) {
        moved.clear();
        double delta_max = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double nx = x[i] - step * (grad[i] + alpha);
            if (nx < 0.0) nx = 0.0;
            const double d = nx - x[i];
            if (d != 0.0) {
                moved.emplace_back(i, d);
                delta_max = std::max(delta_max, std::abs(d));
                x[i] = nx;
            }
        }
        for (const auto& [j, d] : moved) {
            const double* row = g.data() + j * n;
            for (std::size_t k = 0; k < n; ++k) grad[k] += row[k] * d;
        }
        ++res.iters;
        if (delta_max <= opts.tol) {
            converged = true;
            break;
        }
        if (res.iters % 256 == 0) {
            refresh_grad();
            if (try_support_fixed_point(g, atb, alpha, step, opts.tol, x, grad)) {
                converged = true;
                break;
            }
        }
    }
    res.hit_iteration_cap = !converged;
    return res;
}

ProxResult nnbpdn_prox(const RealMatrix& a, const RealVector& y, double alpha,
                       const ProxOptions& opts, const RealVector* warm_start) {
    if (a.rows() != y.size()) throw std::invalid_argument("nnbpdn_prox: dimension mismatch");
    return nnbpdn_prox_gram(gram(a), matvec_transposed(a, y), alpha, opts, warm_start);
}

NnbpdnPath nnbpdn_path(const RealMatrix& a, const RealVector& y, std::size_t n_alphas,
                       const ProxOptions& opts) {
    if (n_alphas < 2) throw std::invalid_argument("nnbpdn_path: need at least two alphas");
    const RealMatrix g = gram(a);
    const RealVector b = matvec_transposed(a, y);
    const double alpha_max = norm_inf(b);
    if (!(alpha_max > 0.0)) throw std::invalid_argument("nnbpdn_path: A^T y is zero");

    NnbpdnPath path;
    path.alphas.reserve(n_alphas);
    for (std::size_t k = 0; k < n_alphas; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(n_alphas - 1);
        path.alphas.push_back(alpha_max * std::pow(1e-4, frac));
    }
    RealVector x(a.cols(), 0.0);
    for (double alpha : path.alphas) {
        ProxResult r = nnbpdn_prox_gram(g, b, alpha, opts, &x);
        x = r.x;
        path.solutions.push_back(std::move(r.x));
        path.hit_cap.push_back(r.hit_iteration_cap);
    }
    return path;
}

SolveResult box_projected_gradient(const BoxSystem& sys, const ProxOptions& opts) {
    const auto wall_start = std::chrono::steady_clock::now();
    const std::size_t n = sys.dim();
    const double step = 1.0 / std::max(gershgorin_max_eigenvalue(sys.q_mat), 1e-300);
    auto clip = [](double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); };

    RealVector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = clip(0.0, sys.lo[i], sys.hi[i]);

    RealVector grad(n);
    auto refresh_grad = [&] {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = -sys.q_vec[i];
            for (std::size_t j = 0; j < n; ++j) acc += sys.q_mat(i, j) * x[j];
            grad[i] = acc;
        }
    };

    std::size_t iters = 0;
    bool converged = false;
    while (iters < opts.max_iters) {
        refresh_grad();
        double pg = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pg = std::max(pg, std::abs(x[i] - clip(x[i] - grad[i], sys.lo[i], sys.hi[i])));
        }
        if (pg <= opts.tol) {
            converged = true;
            break;
        }
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = clip(x[i] - step * grad[i], sys.lo[i], sys.hi[i]);
        }
        ++iters;
    }
    refresh_grad();

    SolveResult res;
    res.lambda_eq = grad;
    res.kkt_residual = box_kkt(sys, x).total;
    res.x_eq = std::move(x);
    res.steps = iters;
    res.switches = 0;
    res.converged = converged;
    res.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return res;
}

}  // namespace nnsa
