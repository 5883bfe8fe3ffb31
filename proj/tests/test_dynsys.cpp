#include <cmath>
#include <sstream>

#include "doctest.h"
#include "nnsa/datagen.hpp"
#include "nnsa/dynsys.hpp"
#include "nnsa/kkt.hpp"
#include "nnsa/solvers.hpp"

using namespace nnsa;

namespace {

// identity system: xtilde = u - x, so the integrator input is directly
// controllable through the constant input
DiscSystem identity_system(RealVector u, double xi = 1.0) {
    const std::size_t n = u.size();
    return DiscSystem::build(RealMatrix::identity(n), std::move(u), xi);
}

Instance rect_instance(std::size_t m, std::size_t n, std::size_t s, std::uint64_t seed,
                       double snr_db = 60.0) {
    return generate(DataModelSpec::rect(m, n, s, snr_db), seed);
}

}  // namespace

TEST_CASE("switched right-hand side follows the three integrator cases") {
    // positive state integrates its input
    {
        const DiscSystem sys = identity_system({-1.0});  // at x = 2: xtilde = -1 - 2 = -3
        const auto [xdot, part] = integrator_rhs(sys, {2.0});
        CHECK(xdot[0] == -3.0);
        CHECK(part.plus == std::vector<std::size_t>{0});
    }
    // pinned state ignores an inward-pointing (negative) input
    {
        const DiscSystem sys = identity_system({-3.0});  // at x = 0: xtilde = -3
        const auto [xdot, part] = integrator_rhs(sys, {0.0});
        CHECK(xdot[0] == 0.0);
        CHECK(part.zero == std::vector<std::size_t>{0});
    }
    // negative state recovers at rate xi regardless of its input
    {
        const DiscSystem sys = identity_system({-9.0}, 1.0);
        const auto [xdot, part] = integrator_rhs(sys, {-0.5});
        CHECK(xdot[0] == 1.0);
        CHECK(part.neg == std::vector<std::size_t>{0});
    }
}

TEST_CASE("zero state with zero input belongs to the positive set") {
    const DiscSystem sys = identity_system({0.0});
    const auto [xdot, part] = integrator_rhs(sys, {0.0});
    CHECK(xdot[0] == 0.0);
    CHECK(part.plus == std::vector<std::size_t>{0});
    CHECK(part.zero.empty());
}

TEST_CASE("Euler step clamps a crossing coordinate to an exact zero") {
    const DiscSystem sys = identity_system({-9.0});  // at x = 1: xtilde = -10
    const SystemState st = make_state(sys, 0.0, {1.0});
    std::vector<SwitchEvent> events;
    const SystemState next = step_projected_euler(sys, st, 0.2, &events);
    CHECK(next.x[0] == 0.0);
    CHECK(next.partition.zero == std::vector<std::size_t>{0});  // new xtilde = -9 < 0
    REQUIRE(events.size() == 1);
    CHECK(events[0].from == SetLabel::Positive);
    CHECK(events[0].to == SetLabel::Zero);
    CHECK(events[0].t == doctest::Approx(0.1).epsilon(1e-12));  // interpolated crossing
}

TEST_CASE("Euler step advances a negative state at constant rate") {
    const DiscSystem sys = identity_system({0.0}, 1.0);
    const SystemState st = make_state(sys, 0.0, {-1.0});
    std::vector<SwitchEvent> events;
    const SystemState next = step_projected_euler(sys, st, 0.25, &events);
    CHECK(next.x[0] == -0.75);
    CHECK(events.empty());
}

TEST_CASE("Euler step fixes the equilibrium point") {
    const DiscSystem sys = identity_system({1.0, -1.0});
    const SystemState st = make_state(sys, 0.0, {1.0, 0.0});
    const SystemState next = step_projected_euler(sys, st, 0.1, nullptr);
    CHECK(std::abs(next.x[0] - 1.0) <= kZeroTol);
    CHECK(std::abs(next.x[1]) <= kZeroTol);
}

TEST_CASE("exact integrator reproduces the scalar analytic trajectory") {
    const DiscSystem sys = identity_system({1.0});
    for (double t : {0.1, 0.5, 1.0, 2.5, 7.0}) {
        const SystemState st = make_state(sys, 0.0, {0.5});
        const auto [adv, events] = step_exact_subsystem(sys, st, t);
        CHECK(events.empty());
        CHECK(adv.x[0] == doctest::Approx(1.0 + (0.5 - 1.0) * std::exp(-t)).epsilon(1e-12));
    }
}

TEST_CASE("exact integrator recovers a negative state at exactly t = 1") {
    const DiscSystem sys = identity_system({1.0}, 1.0);
    const SystemState st = make_state(sys, 0.0, {-1.0});
    const auto [adv, events] = step_exact_subsystem(sys, st, 3.0);
    REQUIRE(!events.empty());
    CHECK(events[0].t == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(events[0].from == SetLabel::Negative);
    // afterwards the state relaxes toward the equilibrium at 1
    CHECK(adv.x[0] > 0.0);
}

TEST_CASE("exact integrator couples a recovering state into the active block") {
    // columns [1, 0] and [0.6, 0.8], so G = [[1, 0.6], [0.6, 1]] and
    // b = A^T y = [1, 1] for y = [1, 0.5]
    const RealMatrix a{{1.0, 0.6}, {0.0, 0.8}};
    const DiscSystem sys = DiscSystem::build(a, {1.0, 0.5}, 1.0);

    // x1 starts at -0.3 and recovers linearly, reaching zero at t = 0.3;
    // meanwhile x0 obeys x0' = 1.18 - 0.6 t - x0, whose solution is
    // x0(t) = -1.28 e^{-t} + 1.78 - 0.6 t
    const SystemState st = make_state(sys, 0.0, {0.5, -0.3});
    {
        const auto [adv, events] = step_exact_subsystem(sys, st, 0.25);
        CHECK(events.empty());
        const double expected = -1.28 * std::exp(-0.25) + 1.78 - 0.6 * 0.25;
        CHECK(adv.x[0] == doctest::Approx(expected).epsilon(1e-10));
        CHECK(adv.x[1] == doctest::Approx(-0.05).epsilon(1e-12));
    }
    {
        const auto [adv, events] = step_exact_subsystem(sys, st, 1.0);
        REQUIRE(!events.empty());
        CHECK(events[0].t == doctest::Approx(0.3).epsilon(1e-10));
        CHECK(events[0].index == 1);
        CHECK(events[0].from == SetLabel::Negative);
    }
}

TEST_CASE("exact integrator locates a pinned release analytically") {
    // columns [1, 0] and [-0.5, sqrt(0.75)]: G01 = -0.5, so the decay of x1
    // toward its target raises the pinned input of x0 through zero
    const double r = std::sqrt(0.75);
    const RealMatrix a{{1.0, -0.5}, {0.0, r}};
    // choose y so that b = A^T y = [-0.4, 1]
    const RealVector y{-0.4, (1.0 - 0.2) / r};
    const DiscSystem sys = DiscSystem::build(a, y, 1.0);

    // x0 pinned (xtilde_0(0) = -0.3), x1(t) = 1 - 0.8 e^{-t}; the release
    // input is xtilde_0(t) = 0.1 - 0.4 e^{-t}, crossing zero at t = ln 4
    const SystemState st = make_state(sys, 0.0, {0.0, 0.2});
    REQUIRE(st.partition.zero == std::vector<std::size_t>{0});
    const auto [adv, events] = step_exact_subsystem(sys, st, 3.0);
    REQUIRE(!events.empty());
    CHECK(events[0].t == doctest::Approx(std::log(4.0)).epsilon(1e-7));
    CHECK(events[0].index == 0);
    CHECK(events[0].from == SetLabel::Zero);
    CHECK(events[0].to == SetLabel::Positive);
}

TEST_CASE("exact integrator leaves an equilibrium unchanged") {
    const Instance inst = rect_instance(8, 4, 2, 5);
    const SolveResult oracle = nnls_active_set(inst.a, inst.y, 1e-12);
    const DiscSystem sys = DiscSystem::build(inst.a, inst.y);
    for (double t : {0.5, 4.0, 64.0}) {
        const SystemState st = make_state(sys, 0.0, oracle.x_eq);
        const auto [adv, events] = step_exact_subsystem(sys, st, t);
        CHECK(events.empty());
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(adv.x[i] == doctest::Approx(oracle.x_eq[i]).epsilon(1e-11));
        }
    }
}

TEST_CASE("solve on the identity system reaches the hand-computed KKT point") {
    const DiscSystem sys = identity_system({1.0, -1.0});
    const auto [res, traj] = solve(sys, RealVector(2, 0.0), {});
    CHECK(res.converged);
    CHECK(res.x_eq[0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(std::abs(res.x_eq[1]) <= 1e-8);
    CHECK(std::abs(res.lambda_eq[0]) <= 1e-8);
    CHECK(res.lambda_eq[1] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(res.kkt_residual <= 1e-8);
}

TEST_CASE("noise-free consistent systems are fit exactly") {
    Instance inst = rect_instance(20, 10, 3, 11);
    inst.y = inst.y0;  // drop the noise
    const DiscSystem sys = DiscSystem::build(inst.a, inst.y);
    const auto [res, traj] = solve(sys, RealVector(10, 0.0), {});
    CHECK(res.converged);
    double err = 0.0, nrm = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
        err += (res.x_eq[i] - inst.x0[i]) * (res.x_eq[i] - inst.x0[i]);
        nrm += inst.x0[i] * inst.x0[i];
    }
    CHECK(std::sqrt(err / nrm) < 1e-6);
}

TEST_CASE("solve agrees with the active-set oracle on rectangular instances") {
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        const Instance inst = rect_instance(20, 10, 3, seed, 30.0);
        const DiscSystem sys = DiscSystem::build(inst.a, inst.y);
        const auto [res, traj] = solve(sys, RealVector(10, 0.0), {});
        const SolveResult oracle = nnls_active_set(inst.a, inst.y, 1e-10);
        REQUIRE(res.converged);
        double err = 0.0, nrm = 0.0;
        for (std::size_t i = 0; i < 10; ++i) {
            err += (res.x_eq[i] - oracle.x_eq[i]) * (res.x_eq[i] - oracle.x_eq[i]);
            nrm += oracle.x_eq[i] * oracle.x_eq[i];
        }
        CHECK(std::sqrt(err) <= 1e-5 * std::sqrt(nrm));
    }
}

TEST_CASE("Lyapunov value") {
    CHECK(lyapunov_value({1.0, 2.0}, {1.0, 2.0}) == 0.0);
    CHECK(lyapunov_value({3.0, 4.0}, {0.0, 0.0}) == 12.5);
    // homogeneity of degree two
    CHECK(lyapunov_value({6.0, 8.0}, {0.0, 0.0}) == 4.0 * 12.5);
}

TEST_CASE("switch counting") {
    // equilibrium start: no transitions
    {
        const DiscSystem sys = identity_system({1.0, -1.0});
        const auto [res, traj] = solve(sys, {1.0, 0.0}, {});
        CHECK(count_switches(traj) == 0);
    }
    // scalar recovery from -1: exactly one transition
    {
        const DiscSystem sys = identity_system({1.0});
        const auto [res, traj] = solve(sys, {-1.0}, {});
        CHECK(count_switches(traj) == 1);
    }
    // switch count stable when simulated ten times past convergence
    {
        const Instance inst = rect_instance(12, 6, 2, 9, 30.0);
        const DiscSystem sys = DiscSystem::build(inst.a, inst.y);
        const auto [res, traj] = solve(sys, RealVector(6, 0.0), {});
        REQUIRE(res.converged);
        SolverOptions rerun;
        rerun.min_time = 10.0 * std::max(res.sim_time, 1.0);
        rerun.max_time = 20.0 * rerun.min_time;
        const auto [res2, traj2] = solve(sys, RealVector(6, 0.0), rerun);
        CHECK(count_switches(traj2) == count_switches(traj));
    }
}

TEST_CASE("non-negativity trapping along the whole trajectory") {
    const Instance inst = rect_instance(10, 8, 3, 21, 20.0);
    const DiscSystem sys = DiscSystem::build(inst.a, inst.y);
    SolverOptions opts;
    opts.record_interval = 1;
    const Trajectory traj = simulate(sys, RealVector(8, 0.0), 5.0, opts);
    for (const auto& s : traj.samples) {
        for (std::size_t i = 0; i < 8; ++i) CHECK(s.x[i] >= 0.0);
    }
}

TEST_CASE("Lyapunov values are non-increasing toward the oracle equilibrium") {
    const Instance inst = rect_instance(16, 8, 3, 33, 30.0);
    const SolveResult oracle = nnls_active_set(inst.a, inst.y, 1e-12);
    const DiscSystem sys = DiscSystem::build(inst.a, inst.y);
    SolverOptions opts;
    opts.record_interval = 1;
    opts.record_states = false;
    opts.lyapunov_reference = oracle.x_eq;
    const auto [res, traj] = solve(sys, RealVector(8, 0.0), opts);
    REQUIRE(traj.lyapunov.size() > 10);
    for (std::size_t k = 1; k < traj.lyapunov.size(); ++k) {
        CHECK(traj.lyapunov[k].second <= traj.lyapunov[k - 1].second + 1e-10);
    }
}

TEST_CASE("the oracle solution is a fixed point of the right-hand side") {
    const Instance inst = rect_instance(14, 7, 2, 41, 30.0);
    const SolveResult oracle = nnls_active_set(inst.a, inst.y, 1e-12);
    const DiscSystem sys = DiscSystem::build(inst.a, inst.y);
    const auto [xdot, part] = integrator_rhs(sys, oracle.x_eq);
    CHECK(norm_inf(xdot) <= 1e-8);
}

TEST_CASE("exact and Euler integrators land on the same equilibrium") {
    for (std::uint64_t seed : {2, 14, 27}) {
        const Instance inst = rect_instance(16, 8, 3, seed, 30.0);
        const DiscSystem sys = DiscSystem::build(inst.a, inst.y);
        SolverOptions euler;
        const auto [re, te] = solve(sys, RealVector(8, 0.0), euler);
        SolverOptions exact;
        exact.integrator = IntegratorKind::ExactSubsystem;
        const auto [rx, tx] = solve(sys, RealVector(8, 0.0), exact);
        REQUIRE(re.converged);
        REQUIRE(rx.converged);
        double err = 0.0, nrm = 0.0;
        for (std::size_t i = 0; i < 8; ++i) {
            err += (re.x_eq[i] - rx.x_eq[i]) * (re.x_eq[i] - rx.x_eq[i]);
            nrm += std::max(1.0, rx.x_eq[i] * rx.x_eq[i]);
        }
        CHECK(std::sqrt(err) <= 1e-6 * std::sqrt(nrm));
    }
}

TEST_CASE("partition recomputed from scratch matches the maintained one") {
    const Instance inst = rect_instance(10, 6, 2, 55, 25.0);
    const DiscSystem sys = DiscSystem::build(inst.a, inst.y);
    SystemState st = make_state(sys, 0.0, RealVector(6, 0.0));
    for (int k = 0; k < 200; ++k) {
        st = step_projected_euler(sys, st, 0.01, nullptr);
        CHECK(st.partition == make_partition(st.x, st.xtilde));
    }
}

TEST_CASE("a state below zero reaches zero at a / xi within one step") {
    const double a = 0.63;
    const double xi = 2.0;
    const double dt = 0.01;
    const DiscSystem sys = identity_system({1.0}, xi);
    SolverOptions opts;
    opts.dt = dt;
    opts.record_interval = 1;
    const Trajectory traj = simulate(sys, {-a}, 1.0, opts);
    double reached = -1.0;
    for (const auto& s : traj.samples) {
        if (s.x[0] >= 0.0) {
            reached = s.t;
            break;
        }
    }
    REQUIRE(reached >= 0.0);
    CHECK(std::abs(reached - a / xi) <= dt + 1e-12);
}

TEST_CASE("a state that blows up raises the divergence error") {
    // inputs large enough that A^T u overflows to infinity
    const RealMatrix ones(2, 2, 1.0);
    const DiscSystem sys = DiscSystem::build(ones, {1e308, 1e308});
    CHECK_THROWS_AS((void)solve(sys, RealVector(2, 1.0), {}), IntegrationDivergedError);
}

TEST_CASE("solve reports non-convergence instead of throwing") {
    const Instance inst = rect_instance(10, 8, 3, 77, 20.0);
    const DiscSystem sys = DiscSystem::build(inst.a, inst.y);
    SolverOptions opts;
    opts.max_steps = 3;  // nowhere near enough
    const auto [res, traj] = solve(sys, RealVector(8, 0.0), opts);
    CHECK(!res.converged);
    CHECK(res.steps == 3);
}

TEST_CASE("trajectory CSV export") {
    const DiscSystem sys = identity_system({1.0, -1.0});
    SolverOptions opts;
    opts.record_interval = 2;
    opts.lyapunov_reference = RealVector{1.0, 0.0};
    const Trajectory traj = simulate(sys, {-0.5, 0.25}, 1.0, opts);

    std::stringstream ss;
    write_trajectory_csv(ss, traj);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "t,x_1,x_2,V");
    std::size_t lines = 0;
    for (std::string line; std::getline(ss, line);) ++lines;
    CHECK(lines == traj.samples.size());

    std::stringstream ev;
    write_switch_events_csv(ev, traj);
    std::getline(ev, header);
    CHECK(header == "t,index,from,to");
}
