#include "nnsa/boxdyn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "nnsa/linalg.hpp"

namespace nnsa {

namespace {

enum class BoxLabel : std::uint8_t { AboveUpper, AtUpper, Interior, AtLower, BelowLower };

BoxLabel classify_box(double x, double lo, double hi) noexcept {
    if (x > hi + kZeroTol) return BoxLabel::AboveUpper;
    if (x >= hi - kZeroTol) return BoxLabel::AtUpper;
    if (x < lo - kZeroTol) return BoxLabel::BelowLower;
    if (x <= lo + kZeroTol) return BoxLabel::AtLower;
    return BoxLabel::Interior;
}

void refresh_xhat(const BoxSystem& sys, const RealVector& x, RealVector& xhat) {
    const std::size_t n = sys.dim();
    const double* q = sys.q_mat.data();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* row = q + i * n;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
        xhat[i] = sys.q_vec[i] - acc;
    }
}

/// One Euler move of a single coordinate; clamps write the bound exactly.
double move_box_coordinate(BoxLabel label, double x, double xhat, double lo, double hi, double dt,
                           double xi) noexcept {
    double nx = 0.0;
    switch (label) {
        case BoxLabel::AboveUpper:
            nx = x - dt * xi;
            return nx <= hi + kZeroTol ? hi : nx;  // recovery lands on the bound
        case BoxLabel::BelowLower:
            nx = x + dt * xi;
            return nx >= lo - kZeroTol ? lo : nx;
        case BoxLabel::AtUpper:
            nx = hi + dt * std::min(0.0, xhat);
            if (nx >= hi - kZeroTol) return hi;  // held at the bound
            return nx <= lo + kZeroTol ? lo : nx;
        case BoxLabel::AtLower:
            nx = lo + dt * std::max(0.0, xhat);
            if (nx <= lo + kZeroTol) return lo;
            return nx >= hi - kZeroTol ? hi : nx;
        case BoxLabel::Interior:
        default:
            nx = x + dt * xhat;
            if (nx >= hi - kZeroTol) return hi;
            if (nx <= lo + kZeroTol) return lo;
            return nx;
    }
}

}  // namespace

BoxSystem BoxSystem::build(RealMatrix q_mat, RealVector q_vec, RealVector lo, RealVector hi,
                           double xi) {
    const std::size_t n = q_vec.size();
    if (q_mat.rows() != n || q_mat.cols() != n || lo.size() != n || hi.size() != n || n == 0) {
        throw std::invalid_argument("BoxSystem: dimension mismatch");
    }
    if (!(xi > 0.0)) throw std::invalid_argument("BoxSystem: xi must be positive");
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(q_mat(i, j)));
    for (std::size_t i = 0; i < n; ++i) {
        if (!(lo[i] < hi[i])) throw std::invalid_argument("BoxSystem: lo must be < hi");
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(q_mat(i, j) - q_mat(j, i)) > 1e-12 * std::max(scale, 1.0)) {
                throw std::invalid_argument("BoxSystem: Q is not symmetric");
            }
        }
    }
    if (!Cholesky::factor(q_mat)) {
        throw std::invalid_argument("BoxSystem: Q is not positive definite");
    }
    BoxSystem sys;
    sys.q_mat = std::move(q_mat);
    sys.q_vec = std::move(q_vec);
    sys.lo = std::move(lo);
    sys.hi = std::move(hi);
    sys.xi = xi;
    return sys;
}

BoxSystem BoxSystem::from_least_squares(const RealMatrix& a, const RealVector& y, RealVector lo,
                                        RealVector hi, double xi) {
    return build(gram(a), matvec_transposed(a, y), std::move(lo), std::move(hi), xi);
}

RealVector box_rhs(const BoxSystem& sys, const RealVector& x) {
    if (x.size() != sys.dim()) throw std::invalid_argument("box_rhs: length mismatch");
    RealVector xhat(sys.dim());
    refresh_xhat(sys, x, xhat);
    RealVector xdot(sys.dim());
    for (std::size_t i = 0; i < sys.dim(); ++i) {
        switch (classify_box(x[i], sys.lo[i], sys.hi[i])) {
            case BoxLabel::AboveUpper: xdot[i] = -sys.xi; break;
            case BoxLabel::AtUpper: xdot[i] = std::min(0.0, xhat[i]); break;
            case BoxLabel::Interior: xdot[i] = xhat[i]; break;
            case BoxLabel::AtLower: xdot[i] = std::max(0.0, xhat[i]); break;
            case BoxLabel::BelowLower: xdot[i] = sys.xi; break;
        }
    }
    return xdot;
}

SolveResult box_solve(const BoxSystem& sys, const RealVector& x0, const SolverOptions& opts,
                      Trajectory* traj) {
    const std::size_t n = sys.dim();
    if (x0.size() != n) throw std::invalid_argument("box_solve: x0 length mismatch");
    const auto wall_start = std::chrono::steady_clock::now();
    const double dt =
        opts.dt > 0.0 ? opts.dt : 1.0 / (2.0 * std::max(gershgorin_max_eigenvalue(sys.q_mat), 1e-300));
    const std::size_t check_every = std::max<std::size_t>(1, opts.check_interval);

    RealVector x = x0;
    RealVector xhat(n);
    refresh_xhat(sys, x, xhat);
    std::vector<BoxLabel> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = classify_box(x[i], sys.lo[i], sys.hi[i]);

    auto record = [&](double t) {
        if (!traj) return;
        if (!traj->samples.empty() && traj->samples.back().t >= t) return;
        traj->samples.push_back({t, x, xhat, {}});
    };
    record(0.0);

    double t = 0.0;
    std::size_t steps = 0;
    std::size_t switches = 0;
    bool converged = box_kkt(sys, x).total <= opts.kkt_tol && opts.min_time <= 0.0;

    while (!converged && t < opts.max_time && steps < opts.max_steps) {
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = move_box_coordinate(labels[i], x[i], xhat[i], sys.lo[i], sys.hi[i], dt, sys.xi);
        }
        refresh_xhat(sys, x, xhat);
        if (!x.all_finite() || !xhat.all_finite()) {
            throw IntegrationDivergedError("box_solve: state diverged");
        }
        t += dt;
        ++steps;
        for (std::size_t i = 0; i < n; ++i) {
            const BoxLabel nl = classify_box(x[i], sys.lo[i], sys.hi[i]);
            if (nl != labels[i]) {
                ++switches;
                labels[i] = nl;
            }
        }
        if (steps % check_every == 0) {
            if (box_kkt(sys, x).total <= opts.kkt_tol && t >= opts.min_time) converged = true;
        }
        if (opts.record_interval > 0 && steps % opts.record_interval == 0) record(t);
    }

    const KktReport report = box_kkt(sys, x);
    converged = report.total <= opts.kkt_tol && t >= opts.min_time;
    record(t);

    SolveResult res;
    res.lambda_eq = RealVector(n);  // gradient Q x - q; bound multipliers are its signed parts
    for (std::size_t i = 0; i < n; ++i) res.lambda_eq[i] = -xhat[i];
    res.x_eq = std::move(x);
    res.kkt_residual = report.total;
    res.switches = switches;
    res.steps = steps;
    res.converged = converged;
    res.sim_time = t;
    res.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return res;
}

}  // namespace nnsa
