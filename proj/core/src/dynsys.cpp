#include "nnsa/dynsys.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "nnsa/detail/format.hpp"
#include "nnsa/linalg.hpp"

namespace nnsa {

namespace {

using Labels = std::vector<SetLabel>;
using Clock = std::chrono::steady_clock;

Labels classify_all(const RealVector& x, const RealVector& xtilde) {
    Labels labels(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) labels[i] = classify_coordinate(x[i], xtilde[i]);
    return labels;
}

IndexPartition partition_from_labels(const Labels& labels) {
    IndexPartition p;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        switch (labels[i]) {
            case SetLabel::Positive: p.plus.push_back(i); break;
            case SetLabel::Zero: p.zero.push_back(i); break;
            case SetLabel::Negative: p.neg.push_back(i); break;
        }
    }
    return p;
}

/// xtilde = A^T u - A^T A x, recomputed from scratch.
void refresh_xtilde(const DiscSystem& sys, const RealVector& x, RealVector& xtilde) {
    const std::size_t n = sys.state_dim();
    const double* g = sys.gram_a.data();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* row = g + i * n;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
        xtilde[i] = sys.atb[i] - acc;
    }
}

/// KKT residual of the NNLS problem read off the state pair: with
/// lambda = -xtilde the stationarity condition holds by construction, so the
/// residual is the max of primal violation, dual violation and
/// complementary slackness.
double kkt_total_from_state(const RealVector& x, const RealVector& xtilde) {
    double primal = 0.0, dual = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        primal = std::max(primal, -std::min(x[i], 0.0));
        dual = std::max(dual, std::max(xtilde[i], 0.0));
        comp = std::max(comp, std::abs(x[i] * xtilde[i]));
    }
    return std::max({primal, dual, comp});
}

struct CoordMove {
    double nx = 0.0;
    double frac = 0.0;  ///< fraction of dt at which a clamped coordinate crossed
    bool clamped = false;
};

/// Membership update with boundary hysteresis: a coordinate sitting on the
/// zero bound moves between the pinned and active sets only when its
/// integrator input is decisively signed. Degenerate coordinates (state and
/// multiplier both zero) otherwise dither with rounding noise and emit
/// unbounded switch events.
SetLabel reconcile_label(SetLabel old_label, double x, double xtilde,
                         double noise_floor) noexcept {
    const SetLabel nl = classify_coordinate(x, xtilde);
    if (nl == old_label) return old_label;
    if (std::abs(x) <= kZeroTol && std::abs(xtilde) <= noise_floor &&
        old_label != SetLabel::Negative && nl != SetLabel::Negative) {
        return old_label;
    }
    return nl;
}

double boundary_noise_floor(const DiscSystem& sys) {
    return 1e-12 * (1.0 + norm_inf(sys.atb));
}

/// Euler update of a single coordinate under the switching rule. Clamps
/// write an exact 0.0 so zero states are representable without a band.
CoordMove move_coordinate(SetLabel label, double x, double xtilde, double dt, double xi) noexcept {
    switch (label) {
        case SetLabel::Zero:
            // stays pinned; snaps stray band-interior initial values
            return {0.0, 0.0, x != 0.0};
        case SetLabel::Negative: {
            const double nx = x + dt * xi;
            if (nx >= -kZeroTol) return {0.0, std::min(1.0, -x / (dt * xi)), true};
            return {nx, 0.0, false};
        }
        case SetLabel::Positive:
        default: {
            const double nx = x + dt * xtilde;
            if (nx <= kZeroTol) {
                if (x > kZeroTol) {
                    return {0.0, nx < 0.0 ? x / (x - nx) : 1.0, true};
                }
                return {0.0, 1.0, x != 0.0};  // held at the boundary
            }
            return {nx, 0.0, false};
        }
    }
}

double default_dt(const DiscSystem& sys) {
    const double bound = gershgorin_max_eigenvalue(sys.gram_a);
    return 1.0 / (2.0 * std::max(bound, 1e-300));
}

}  // namespace

const char* to_string(SetLabel label) noexcept {
    switch (label) {
        case SetLabel::Positive: return "plus";
        case SetLabel::Zero: return "zero";
        case SetLabel::Negative: return "neg";
    }
    return "?";
}

SetLabel classify_coordinate(double x, double xtilde) noexcept {
    if (x > kZeroTol) return SetLabel::Positive;
    if (x < -kZeroTol) return SetLabel::Negative;
    return xtilde >= 0.0 ? SetLabel::Positive : SetLabel::Zero;
}

IndexPartition make_partition(const RealVector& x, const RealVector& xtilde) {
    if (x.size() != xtilde.size()) throw std::invalid_argument("make_partition: length mismatch");
    return partition_from_labels(classify_all(x, xtilde));
}

DiscSystem DiscSystem::build(RealMatrix a, RealVector input, double xi) {
    if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("DiscSystem: empty matrix");
    if (a.rows() != input.size()) throw std::invalid_argument("DiscSystem: input length mismatch");
    if (!(xi > 0.0)) throw std::invalid_argument("DiscSystem: xi must be positive");
    DiscSystem sys;
    sys.gram_a = gram(a);
    sys.atb = matvec_transposed(a, input);
    sys.a = std::move(a);
    sys.input = std::move(input);
    sys.xi = xi;
    return sys;
}

SystemState make_state(const DiscSystem& sys, double t, RealVector x) {
    if (x.size() != sys.state_dim()) throw std::invalid_argument("make_state: length mismatch");
    SystemState st;
    st.t = t;
    st.x = std::move(x);
    st.xtilde = RealVector(sys.state_dim());
    refresh_xtilde(sys, st.x, st.xtilde);
    st.partition = make_partition(st.x, st.xtilde);
    return st;
}

std::pair<RealVector, IndexPartition> integrator_rhs(const DiscSystem& sys, const RealVector& x) {
    if (x.size() != sys.state_dim()) throw std::invalid_argument("integrator_rhs: length mismatch");
    RealVector xtilde(x.size());
    refresh_xtilde(sys, x, xtilde);
    RealVector xdot(x.size());
    Labels labels = classify_all(x, xtilde);
    for (std::size_t i = 0; i < x.size(); ++i) {
        switch (labels[i]) {
            case SetLabel::Positive: xdot[i] = xtilde[i]; break;
            case SetLabel::Zero: xdot[i] = 0.0; break;
            case SetLabel::Negative: xdot[i] = sys.xi; break;
        }
    }
    return {std::move(xdot), partition_from_labels(labels)};
}

SystemState step_projected_euler(const DiscSystem& sys, const SystemState& state, double dt,
                                 std::vector<SwitchEvent>* events) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_projected_euler: dt must be positive");
    const std::size_t n = sys.state_dim();
    if (state.x.size() != n || state.xtilde.size() != n) {
        throw std::invalid_argument("step_projected_euler: state size mismatch");
    }
    const Labels old_labels = classify_all(state.x, state.xtilde);
    SystemState next;
    next.t = state.t + dt;
    next.x = state.x;
    std::vector<CoordMove> moves(n);
    for (std::size_t i = 0; i < n; ++i) {
        moves[i] = move_coordinate(old_labels[i], state.x[i], state.xtilde[i], dt, sys.xi);
        next.x[i] = moves[i].nx;
    }
    next.xtilde = RealVector(n);
    refresh_xtilde(sys, next.x, next.xtilde);
    if (!next.x.all_finite() || !next.xtilde.all_finite()) {
        throw IntegrationDivergedError("projected Euler step produced a non-finite state");
    }
    const Labels new_labels = classify_all(next.x, next.xtilde);
    if (events) {
        for (std::size_t i = 0; i < n; ++i) {
            if (new_labels[i] == old_labels[i]) continue;
            const double ev_t =
                moves[i].clamped ? state.t + moves[i].frac * dt : next.t;
            events->push_back({ev_t, i, old_labels[i], new_labels[i]});
        }
    }
    next.partition = partition_from_labels(new_labels);
    return next;
}

double lyapunov_value(const RealVector& x, const RealVector& x_eq) {
    if (x.size() != x_eq.size()) throw std::invalid_argument("lyapunov_value: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double z = x[i] - x_eq[i];
        acc += z * z;
    }
    return 0.5 * acc;
}

std::size_t count_switches(const Trajectory& traj) noexcept { return traj.switch_events.size(); }

// ---------------------------------------------------------------------------
// Exact piecewise integration
// ---------------------------------------------------------------------------

namespace {

/// Closed-form flow on one interval of constant partition. In the eigenbasis
/// of the positive-set Gram block each mode obeys
///   y' = p + q s - lambda y,
/// whose solution is evaluated with expm1-based formulas so short intervals
/// do not lose precision.
struct ExactInterval {
    std::vector<std::size_t> p, z, ng;
    SymmetricEigen eig;       // of the positive-set Gram block
    RealVector y0, pt, qt;    // eigen-coordinates of state / forcing / forcing slope
    RealVector xng0;          // negative-set states at interval start
    RealVector zc, zd;        // release detection: xtilde_z(s) = zc - G[z,p] x_p(s) - zd s
    double xi = 1.0;
};

RealVector eval_positive_block(const ExactInterval& iv, double s) {
    const std::size_t k = iv.p.size();
    RealVector y(k);
    for (std::size_t m = 0; m < k; ++m) {
        const double lam = iv.eig.values[m];
        const double u = lam * s;
        const double em1 = std::expm1(-u);  // exp(-u) - 1
        const double h = std::abs(u) < 1e-4
                             ? 0.5 - u / 6.0 + u * u / 24.0 - u * u * u / 120.0
                             : (em1 + u) / (u * u);
        y[m] = iv.y0[m] * (em1 + 1.0) - (iv.pt[m] / lam) * em1 + iv.qt[m] * s * s * h;
    }
    RealVector xp(k);
    for (std::size_t r = 0; r < k; ++r) {
        double acc = 0.0;
        for (std::size_t m = 0; m < k; ++m) acc += iv.eig.vectors(r, m) * y[m];
        xp[r] = acc;
    }
    return xp;
}

/// xtilde of the pinned coordinates as a function of interval time.
RealVector eval_pinned_inputs(const DiscSystem& sys, const ExactInterval& iv, double s,
                              const RealVector& xp) {
    RealVector out(iv.z.size());
    for (std::size_t zi = 0; zi < iv.z.size(); ++zi) {
        double acc = iv.zc[zi] - iv.zd[zi] * s;
        const double* grow = sys.gram_a.data() + iv.z[zi] * sys.state_dim();
        for (std::size_t r = 0; r < iv.p.size(); ++r) acc -= grow[iv.p[r]] * xp[r];
        out[zi] = acc;
    }
    return out;
}

ExactInterval build_interval(const DiscSystem& sys, const SystemState& st, const Labels& labels) {
    ExactInterval iv;
    iv.xi = sys.xi;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        switch (labels[i]) {
            case SetLabel::Positive: iv.p.push_back(i); break;
            case SetLabel::Zero: iv.z.push_back(i); break;
            case SetLabel::Negative: iv.ng.push_back(i); break;
        }
    }
    iv.xng0 = RealVector(iv.ng.size());
    for (std::size_t j = 0; j < iv.ng.size(); ++j) iv.xng0[j] = st.x[iv.ng[j]];

    if (!iv.p.empty()) {
        const RealMatrix gp = submatrix(sys.gram_a, iv.p, iv.p);
        iv.eig = eigen_symmetric(gp);
        const double lam_max = iv.eig.values[iv.p.size() - 1];
        if (!(iv.eig.values[0] > std::max(1e-300, lam_max * 1e-12))) {
            throw SingularSubsystemError(
                "exact integrator: positive-set Gram block is singular; "
                "use the projected-Euler integrator");
        }
        // forcing at interval start and its (linear) drift from recovering states
        RealVector f(iv.p.size()), fslope(iv.p.size(), 0.0);
        for (std::size_t r = 0; r < iv.p.size(); ++r) {
            const double* grow = sys.gram_a.data() + iv.p[r] * sys.state_dim();
            double acc = sys.atb[iv.p[r]];
            double slope = 0.0;
            for (std::size_t j = 0; j < iv.ng.size(); ++j) {
                acc -= grow[iv.ng[j]] * iv.xng0[j];
                slope += grow[iv.ng[j]];
            }
            f[r] = acc;
            fslope[r] = -sys.xi * slope;
        }
        const std::size_t k = iv.p.size();
        iv.y0 = RealVector(k);
        iv.pt = RealVector(k);
        iv.qt = RealVector(k);
        for (std::size_t m = 0; m < k; ++m) {
            double a0 = 0.0, a1 = 0.0, a2 = 0.0;
            for (std::size_t r = 0; r < k; ++r) {
                const double v = iv.eig.vectors(r, m);
                a0 += v * st.x[iv.p[r]];
                a1 += v * f[r];
                a2 += v * fslope[r];
            }
            iv.y0[m] = a0;
            iv.pt[m] = a1;
            iv.qt[m] = a2;
        }
    }

    iv.zc = RealVector(iv.z.size());
    iv.zd = RealVector(iv.z.size());
    for (std::size_t zi = 0; zi < iv.z.size(); ++zi) {
        const double* grow = sys.gram_a.data() + iv.z[zi] * sys.state_dim();
        double c = sys.atb[iv.z[zi]];
        double d = 0.0;
        for (std::size_t j = 0; j < iv.ng.size(); ++j) {
            c -= grow[iv.ng[j]] * iv.xng0[j];
            d += grow[iv.ng[j]];
        }
        iv.zc[zi] = c;
        iv.zd[zi] = sys.xi * d;
    }
    return iv;
}

enum class EventKind : std::uint8_t { PositiveCross, PinnedRelease, NegativeRecovery };

struct EventCandidate {
    double s = 0.0;
    std::size_t coord = 0;  // state index
    EventKind kind = EventKind::PositiveCross;
};

/// Earliest transition in (0, horizon], or nullopt. Zero crossings of the
/// positive block and sign changes of the pinned inputs are bracketed on a
/// geometric grid and refined by bisection; recoveries have exact times.
/// Crossings count only beyond `noise_floor` so that coordinates hovering at
/// a boundary within rounding noise do not emit zero-length intervals.
std::optional<EventCandidate> earliest_event(const DiscSystem& sys, const ExactInterval& iv,
                                             const SystemState& st, double horizon,
                                             double noise_floor) {
    std::optional<EventCandidate> best;
    auto consider = [&](const EventCandidate& c) {
        if (!best || c.s < best->s) best = c;
    };

    for (std::size_t j = 0; j < iv.ng.size(); ++j) {
        const double s = -iv.xng0[j] / iv.xi;
        if (s > 0.0 && s <= horizon) consider({s, iv.ng[j], EventKind::NegativeRecovery});
    }

    // The flow mixes time scales from 1/lambda_max to 1/lambda_min, so the
    // scan grid is geometric: short-lived dips near the interval start and
    // slow tail crossings are both resolved at ~3% spacing.
    constexpr int kGrid = 720;
    constexpr double kSpan = 1e-9;  // first grid point at horizon * kSpan
    const double s_floor = horizon * 1e-15;

    // interval-start values taken from the state itself, not the eigenbasis
    RealVector prev_xp(iv.p.size());
    for (std::size_t r = 0; r < iv.p.size(); ++r) prev_xp[r] = st.x[iv.p[r]];
    RealVector prev_xz(iv.z.size());
    for (std::size_t zi = 0; zi < iv.z.size(); ++zi) prev_xz[zi] = st.xtilde[iv.z[zi]];

    double s_prev = 0.0;
    for (int k = 1; k <= kGrid; ++k) {
        if (best && s_prev >= best->s) break;
        const double s_k =
            k == kGrid ? horizon
                       : horizon * kSpan *
                             std::pow(1.0 / kSpan, static_cast<double>(k - 1) / (kGrid - 1));
        const RealVector xp = eval_positive_block(iv, s_k);
        const RealVector xz = eval_pinned_inputs(sys, iv, s_k, xp);

        bool found = false;
        for (std::size_t r = 0; r < iv.p.size(); ++r) {
            if (!(prev_xp[r] >= -noise_floor && xp[r] < -noise_floor)) continue;
            double lo = s_prev, hi = s_k;
            for (int it = 0; it < 80 && hi - lo > s_floor; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (eval_positive_block(iv, mid)[r] < -noise_floor) hi = mid;
                else lo = mid;
            }
            consider({std::max(hi, s_floor), iv.p[r], EventKind::PositiveCross});
            found = true;
        }
        for (std::size_t zi = 0; zi < iv.z.size(); ++zi) {
            if (!(prev_xz[zi] < noise_floor && xz[zi] >= noise_floor)) continue;
            double lo = s_prev, hi = s_k;
            for (int it = 0; it < 80 && hi - lo > s_floor; ++it) {
                const double mid = 0.5 * (lo + hi);
                const RealVector xpm = eval_positive_block(iv, mid);
                if (eval_pinned_inputs(sys, iv, mid, xpm)[zi] >= noise_floor) hi = mid;
                else lo = mid;
            }
            consider({std::max(hi, s_floor), iv.z[zi], EventKind::PinnedRelease});
            found = true;
        }
        if (found) break;
        prev_xp = xp;
        prev_xz = xz;
        s_prev = s_k;
    }
    return best;
}

}  // namespace

std::pair<SystemState, std::vector<SwitchEvent>> step_exact_subsystem(const DiscSystem& sys,
                                                                      const SystemState& state,
                                                                      double t_end) {
    const std::size_t n = sys.state_dim();
    if (state.x.size() != n) throw std::invalid_argument("step_exact_subsystem: size mismatch");
    SystemState cur = state;
    if (cur.xtilde.size() != n) cur.xtilde = RealVector(n);
    refresh_xtilde(sys, cur.x, cur.xtilde);
    std::vector<SwitchEvent> events;

    const double noise_floor = boundary_noise_floor(sys);
    const double span = std::max(1.0, std::abs(t_end));
    Labels labels = classify_all(cur.x, cur.xtilde);
    int intervals = 0;
    while (t_end - cur.t > span * 1e-15) {
        if (++intervals > 200000) {
            throw IntegrationDivergedError("exact integrator: interval count exploded");
        }
        // pinned coordinates hold an exact zero
        bool snapped = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] != SetLabel::Negative && std::abs(cur.x[i]) <= kZeroTol &&
                cur.x[i] != 0.0) {
                cur.x[i] = 0.0;
                snapped = true;
            }
        }
        if (snapped) refresh_xtilde(sys, cur.x, cur.xtilde);
        const ExactInterval iv = build_interval(sys, cur, labels);
        const double horizon = t_end - cur.t;
        const auto ev = earliest_event(sys, iv, cur, horizon, noise_floor);
        const double s_adv = ev ? ev->s : horizon;

        const RealVector xp = eval_positive_block(iv, s_adv);
        for (std::size_t r = 0; r < iv.p.size(); ++r) cur.x[iv.p[r]] = xp[r];
        for (std::size_t j = 0; j < iv.ng.size(); ++j) cur.x[iv.ng[j]] = iv.xng0[j] + iv.xi * s_adv;
        if (ev && ev->kind != EventKind::PinnedRelease) cur.x[ev->coord] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(cur.x[i]) <= kZeroTol) cur.x[i] = 0.0;  // coinciding touches
        }
        cur.t += s_adv;
        refresh_xtilde(sys, cur.x, cur.xtilde);
        if (!cur.x.all_finite() || !cur.xtilde.all_finite()) {
            throw IntegrationDivergedError("exact integrator produced a non-finite state");
        }
        for (std::size_t i = 0; i < n; ++i) {
            const SetLabel nl = reconcile_label(labels[i], cur.x[i], cur.xtilde[i], noise_floor);
            if (nl != labels[i]) {
                events.push_back({cur.t, i, labels[i], nl});
                labels[i] = nl;
            }
        }
        if (!ev) break;
    }
    cur.t = t_end;
    cur.partition = make_partition(cur.x, cur.xtilde);
    return {std::move(cur), std::move(events)};
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

namespace {

struct Recorder {
    const SolverOptions& opts;
    Trajectory& traj;
    double last_t = -1.0;

    void record(double t, const RealVector& x, const RealVector& xtilde) {
        if (!traj.samples.empty() || !traj.lyapunov.empty()) {
            if (t <= last_t) return;  // keep sample times strictly increasing
        }
        last_t = t;
        if (opts.lyapunov_reference) {
            traj.lyapunov.emplace_back(t, lyapunov_value(x, *opts.lyapunov_reference));
        }
        if (opts.record_states) {
            traj.samples.push_back({t, x, xtilde, make_partition(x, xtilde)});
        }
    }
};

std::pair<SolveResult, Trajectory> solve_euler(const DiscSystem& sys, const RealVector& x0,
                                               const SolverOptions& opts,
                                               Clock::time_point wall_start) {
    const std::size_t n = sys.state_dim();
    const double dt_base = opts.dt > 0.0 ? opts.dt : default_dt(sys);
    const bool adaptive = opts.adaptive_dt && !(opts.dt > 0.0);
    const double dt_cap = dt_base * 1048576.0;
    double dt = dt_base;
    std::size_t stable_steps = 0;
    const std::size_t check_every = std::max<std::size_t>(1, opts.check_interval);

    RealVector x = x0;
    RealVector xtilde(n);
    refresh_xtilde(sys, x, xtilde);
    Labels labels = classify_all(x, xtilde);

    Trajectory traj;
    Recorder rec{opts, traj};
    rec.record(0.0, x, xtilde);

    double t = 0.0;
    std::size_t steps = 0;
    bool converged = kkt_total_from_state(x, xtilde) <= opts.kkt_tol && opts.min_time <= 0.0;

    std::vector<std::pair<std::size_t, double>> moved;
    std::vector<double> fracs(n, 0.0);
    std::vector<std::uint8_t> clamped(n, 0);
    const double* g = sys.gram_a.data();

    // Stiff instances crawl once the slow mode of the active block dominates.
    // After a long stretch with no transitions the state is advanced along
    // the exact flow of the current subsystem instead (event-checked), which
    // preserves the trajectory semantics while skipping the crawl.
    double jump_horizon = 256.0 * dt_base;
    bool exact_blocked = false;  // singular block in this stable stretch
    const double noise_floor = boundary_noise_floor(sys);

    while (!converged && t < opts.max_time && steps < opts.max_steps) {
        moved.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] == SetLabel::Zero && x[i] == 0.0) {
                clamped[i] = 0;
                continue;
            }
            const CoordMove mv = move_coordinate(labels[i], x[i], xtilde[i], dt, sys.xi);
            clamped[i] = mv.clamped;
            fracs[i] = mv.frac;
            if (mv.nx != x[i]) {
                moved.emplace_back(i, mv.nx - x[i]);
                x[i] = mv.nx;
            }
        }
        // cheap rank-|moved| correction of xtilde; a full recomputation runs
        // on the check cadence to stop drift from accumulating
        for (const auto& [j, dx] : moved) {
            const double* grow = g + j * n;
            for (std::size_t k = 0; k < n; ++k) xtilde[k] -= grow[k] * dx;
        }
        const double t_prev = t;
        t = t_prev + dt;
        ++steps;

        const bool checking = steps % check_every == 0;
        if (checking) refresh_xtilde(sys, x, xtilde);

        bool partition_changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const SetLabel nl = reconcile_label(labels[i], x[i], xtilde[i], noise_floor);
            if (nl != labels[i]) {
                traj.switch_events.push_back(
                    {clamped[i] ? t_prev + fracs[i] * dt : t, i, labels[i], nl});
                labels[i] = nl;
                partition_changed = true;
            }
        }
        if (adaptive) {
            if (partition_changed) {
                dt = dt_base;
                stable_steps = 0;
                exact_blocked = false;
                jump_horizon = 256.0 * dt_base;
            } else if (++stable_steps == 16) {
                // Gershgorin bound of the Gram block restricted to the moving set
                double bound = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (labels[i] != SetLabel::Positive) continue;
                    double row_sum = 0.0;
                    const double* grow = g + i * n;
                    for (std::size_t j = 0; j < n; ++j) {
                        if (labels[j] == SetLabel::Positive) row_sum += std::abs(grow[j]);
                    }
                    bound = std::max(bound, row_sum);
                }
                dt = std::clamp(1.0 / (2.0 * std::max(bound, 1e-300)), dt_base, dt_cap);
            }
        }

        if (checking) {
            if (!x.all_finite() || !xtilde.all_finite()) {
                throw IntegrationDivergedError("solve: state diverged");
            }
            if (kkt_total_from_state(x, xtilde) <= opts.kkt_tol && t >= opts.min_time) {
                converged = true;
            }
            if (!converged && adaptive && !exact_blocked && stable_steps >= 512 &&
                t < opts.max_time) {
                const double horizon = std::min(opts.max_time - t, jump_horizon);
                SystemState cur{t, x, xtilde, partition_from_labels(labels)};
                try {
                    auto [adv, events] = step_exact_subsystem(sys, cur, t + horizon);
                    x = std::move(adv.x);
                    xtilde = std::move(adv.xtilde);
                    t = adv.t;
                    steps += events.size() + 1;
                    for (std::size_t i = 0; i < n; ++i) {
                        labels[i] = reconcile_label(labels[i], x[i], xtilde[i], noise_floor);
                    }
                    if (events.empty()) {
                        jump_horizon *= 2.0;
                    } else {
                        traj.switch_events.insert(traj.switch_events.end(), events.begin(),
                                                  events.end());
                        dt = dt_base;
                        stable_steps = 0;
                        jump_horizon = 256.0 * dt_base;
                    }
                    if (kkt_total_from_state(x, xtilde) <= opts.kkt_tol && t >= opts.min_time) {
                        converged = true;
                    }
                } catch (const SingularSubsystemError&) {
                    exact_blocked = true;
                }
            }
        }
        if (opts.record_interval > 0 && steps % opts.record_interval == 0) {
            if (!checking) refresh_xtilde(sys, x, xtilde);
            rec.record(t, x, xtilde);
        }
    }

    refresh_xtilde(sys, x, xtilde);
    const double kkt = kkt_total_from_state(x, xtilde);
    converged = kkt <= opts.kkt_tol && t >= opts.min_time;
    rec.record(t, x, xtilde);

    SolveResult res;
    res.lambda_eq = RealVector(n);
    for (std::size_t i = 0; i < n; ++i) res.lambda_eq[i] = -xtilde[i];
    res.x_eq = std::move(x);
    res.kkt_residual = kkt;
    res.switches = traj.switch_events.size();
    res.steps = steps;
    res.converged = converged;
    res.sim_time = t;
    res.wall_time_s = std::chrono::duration<double>(Clock::now() - wall_start).count();
    return {std::move(res), std::move(traj)};
}

std::pair<SolveResult, Trajectory> solve_exact(const DiscSystem& sys, const RealVector& x0,
                                               const SolverOptions& opts,
                                               Clock::time_point wall_start) {
    SystemState st = make_state(sys, 0.0, x0);
    Trajectory traj;
    Recorder rec{opts, traj};
    rec.record(0.0, st.x, st.xtilde);

    double kkt = kkt_total_from_state(st.x, st.xtilde);
    bool converged = kkt <= opts.kkt_tol && opts.min_time <= 0.0;
    std::size_t steps = 0;
    double chunk = 1.0;

    while (!converged && st.t < opts.max_time && steps < opts.max_steps) {
        const double target = std::min(st.t + chunk, std::max(opts.max_time, opts.min_time));
        auto [next, events] = step_exact_subsystem(sys, st, target);
        st = std::move(next);
        steps += events.size() + 1;
        traj.switch_events.insert(traj.switch_events.end(), events.begin(), events.end());
        kkt = kkt_total_from_state(st.x, st.xtilde);
        if (kkt <= opts.kkt_tol && st.t >= opts.min_time) converged = true;
        rec.record(st.t, st.x, st.xtilde);
        chunk *= 2.0;
    }

    SolveResult res;
    res.lambda_eq = RealVector(st.x.size());
    for (std::size_t i = 0; i < st.x.size(); ++i) res.lambda_eq[i] = -st.xtilde[i];
    res.x_eq = st.x;
    res.kkt_residual = kkt;
    res.switches = traj.switch_events.size();
    res.steps = steps;
    res.converged = converged;
    res.sim_time = st.t;
    res.wall_time_s = std::chrono::duration<double>(Clock::now() - wall_start).count();
    return {std::move(res), std::move(traj)};
}

}  // namespace

std::pair<SolveResult, Trajectory> solve(const DiscSystem& sys, const RealVector& x0,
                                         const SolverOptions& opts) {
    if (x0.size() != sys.state_dim()) throw std::invalid_argument("solve: x0 length mismatch");
    if (opts.lyapunov_reference && opts.lyapunov_reference->size() != sys.state_dim()) {
        throw std::invalid_argument("solve: lyapunov reference length mismatch");
    }
    const auto wall_start = Clock::now();
    if (opts.integrator == IntegratorKind::ExactSubsystem) {
        return solve_exact(sys, x0, opts, wall_start);
    }
    return solve_euler(sys, x0, opts, wall_start);
}

Trajectory simulate(const DiscSystem& sys, const RealVector& x0, double t_end,
                    const SolverOptions& opts) {
    if (x0.size() != sys.state_dim()) throw std::invalid_argument("simulate: x0 length mismatch");
    const double dt = opts.dt > 0.0 ? opts.dt : default_dt(sys);
    const std::size_t every = std::max<std::size_t>(1, opts.record_interval);

    Trajectory traj;
    SystemState st = make_state(sys, 0.0, x0);
    auto record = [&](const SystemState& s) {
        if (opts.lyapunov_reference) {
            traj.lyapunov.emplace_back(s.t, lyapunov_value(s.x, *opts.lyapunov_reference));
        }
        traj.samples.push_back(s);
    };
    record(st);
    std::size_t step = 0;
    while (st.t < t_end) {
        st = step_projected_euler(sys, st, dt, &traj.switch_events);
        ++step;
        if (step % every == 0 || st.t >= t_end) record(st);
    }
    return traj;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    std::string out;
    const bool with_v = !traj.lyapunov.empty() && traj.lyapunov.size() == traj.samples.size();
    if (traj.samples.empty()) {
        out += "t,V\n";
        for (const auto& [t, v] : traj.lyapunov) {
            detail::append_number(out, t);
            out += ',';
            detail::append_number(out, v);
            out += '\n';
        }
        os << out;
        return;
    }
    const std::size_t n = traj.samples.front().x.size();
    out += "t";
    for (std::size_t i = 1; i <= n; ++i) {
        out += ",x_";
        detail::append_number(out, static_cast<std::uint64_t>(i));
    }
    if (with_v) out += ",V";
    out += '\n';
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
        const auto& s = traj.samples[k];
        detail::append_number(out, s.t);
        for (std::size_t i = 0; i < n; ++i) {
            out += ',';
            detail::append_number(out, s.x[i]);
        }
        if (with_v) {
            out += ',';
            detail::append_number(out, traj.lyapunov[k].second);
        }
        out += '\n';
    }
    os << out;
}

void write_switch_events_csv(std::ostream& os, const Trajectory& traj) {
    std::string out = "t,index,from,to\n";
    for (const auto& e : traj.switch_events) {
        detail::append_number(out, e.t);
        out += ',';
        detail::append_number(out, static_cast<std::uint64_t>(e.index + 1));
        out += ',';
        out += to_string(e.from);
        out += ',';
        out += to_string(e.to);
        out += '\n';
    }
    os << out;
}

}  // namespace nnsa
