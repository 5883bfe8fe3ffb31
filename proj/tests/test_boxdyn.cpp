#include <cmath>

#include "doctest.h"
#include "nnsa/boxdyn.hpp"
#include "nnsa/datagen.hpp"
#include "nnsa/linalg.hpp"
#include "nnsa/rng.hpp"
#include "nnsa/solvers.hpp"

using namespace nnsa;

namespace {

// random SPD system with bounds wide enough to be interesting
BoxSystem random_box(std::size_t n, std::uint64_t seed, double lo_val = -0.5, double hi_val = 1.5) {
    Philox rng(seed);
    RealMatrix b(n + 4, n);
    for (std::size_t r = 0; r < n + 4; ++r)
        for (std::size_t c = 0; c < n; ++c) b(r, c) = rng.uniform(-1.0, 1.0);
    RealMatrix q = gram(b);
    for (std::size_t i = 0; i < n; ++i) q(i, i) += 0.5;
    RealVector qv(n);
    for (std::size_t i = 0; i < n; ++i) qv[i] = rng.uniform(-2.0, 2.0);
    return BoxSystem::build(std::move(q), std::move(qv), RealVector(n, lo_val),
                            RealVector(n, hi_val));
}

double rel_l2(const RealVector& a, const RealVector& b) {
    double err = 0.0, nrm = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        err += (a[i] - b[i]) * (a[i] - b[i]);
        nrm += b[i] * b[i];
    }
    return std::sqrt(err) / std::max(1e-30, std::sqrt(nrm));
}

}  // namespace

TEST_CASE("box right-hand side follows the five cases") {
    // q chosen so xhat = q - x at the probe point
    const RealMatrix eye = RealMatrix::identity(1);
    const RealVector lo{0.0};
    const RealVector hi{1.0};

    // interior with xhat = 0.3
    {
        const BoxSystem sys = BoxSystem::build(eye, {0.8}, lo, hi);  // at x=0.5: xhat=0.3
        CHECK(box_rhs(sys, {0.5})[0] == doctest::Approx(0.3).epsilon(1e-15));
    }
    // at the upper bound with outward xhat: held (negative part)
    {
        const BoxSystem sys = BoxSystem::build(eye, {1.3}, lo, hi);  // at x=1: xhat=0.3
        CHECK(box_rhs(sys, {1.0})[0] == 0.0);
    }
    // above the upper bound: recover at -xi
    {
        const BoxSystem sys = BoxSystem::build(eye, {0.0}, lo, hi, 2.0);
        CHECK(box_rhs(sys, {1.1})[0] == -2.0);
    }
    // at the lower bound with inward xhat: moves (positive part)
    {
        const BoxSystem sys = BoxSystem::build(eye, {0.4}, lo, hi);  // at x=0: xhat=0.4
        CHECK(box_rhs(sys, {0.0})[0] == doctest::Approx(0.4).epsilon(1e-15));
    }
    // below the lower bound: recover at +xi
    {
        const BoxSystem sys = BoxSystem::build(eye, {0.0}, lo, hi, 2.0);
        CHECK(box_rhs(sys, {-0.3})[0] == 2.0);
    }
}

TEST_CASE("BoxSystem validation") {
    const RealMatrix eye = RealMatrix::identity(2);
    CHECK_THROWS_AS(
        (void)BoxSystem::build(eye, {0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}),  // lo == hi
        std::invalid_argument);
    CHECK_THROWS_AS(
        (void)BoxSystem::build(RealMatrix{{1.0, 0.4}, {0.0, 1.0}}, {0.0, 0.0}, {0.0, 0.0},
                               {1.0, 1.0}),
        std::invalid_argument);  // asymmetric
    CHECK_THROWS_AS(
        (void)BoxSystem::build(RealMatrix{{1.0, 2.0}, {2.0, 1.0}}, {0.0, 0.0}, {0.0, 0.0},
                               {1.0, 1.0}),
        std::invalid_argument);  // indefinite
}

TEST_CASE("decoupled box QP clips the unconstrained optimum") {
    const BoxSystem sys =
        BoxSystem::build(RealMatrix::identity(2), {2.0, -2.0}, {0.0, 0.0}, {1.0, 1.0});
    const SolveResult res = box_solve(sys, {0.5, 0.5}, {});
    CHECK(res.converged);
    CHECK(res.x_eq[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(res.x_eq[1]) <= 1e-8);
}

TEST_CASE("inactive bounds reproduce the unconstrained minimum") {
    const BoxSystem sys = random_box(5, 3, -100.0, 100.0);
    const SolveResult res = box_solve(sys, RealVector(5, 0.0), {});
    REQUIRE(res.converged);
    const auto chol = Cholesky::factor(sys.q_mat);
    REQUIRE(chol.has_value());
    const RealVector x_star = chol->solve(sys.q_vec);
    CHECK(rel_l2(res.x_eq, x_star) < 1e-7);
}

TEST_CASE("zero lower bound and huge upper bound reduce to the NNLS dynamics") {
    const Instance inst = generate(DataModelSpec::rect(12, 6, 2, 30.0), 19);
    const BoxSystem box =
        BoxSystem::from_least_squares(inst.a, inst.y, RealVector(6, 0.0), RealVector(6, 1e6));
    const SolveResult via_box = box_solve(box, RealVector(6, 0.0), {});
    const DiscSystem sys = DiscSystem::build(inst.a, inst.y);
    const auto [via_dyn, traj] = solve(sys, RealVector(6, 0.0), {});
    REQUIRE(via_box.converged);
    REQUIRE(via_dyn.converged);
    CHECK(rel_l2(via_box.x_eq, via_dyn.x_eq) < 1e-6);
}

TEST_CASE("feasibility trapping: iterates stay inside the box") {
    const BoxSystem sys = random_box(4, 8);
    Trajectory traj;
    SolverOptions opts;
    opts.record_interval = 1;
    const SolveResult res = box_solve(sys, RealVector(4, 0.0), opts, &traj);
    REQUIRE(res.converged);
    for (const auto& s : traj.samples) {
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(s.x[i] >= sys.lo[i]);
            CHECK(s.x[i] <= sys.hi[i]);
        }
    }
}

TEST_CASE("states outside the box recover and stay feasible") {
    const BoxSystem sys = random_box(3, 12);
    const SolveResult res = box_solve(sys, {5.0, -3.0, 0.1}, {});
    REQUIRE(res.converged);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(res.x_eq[i] >= sys.lo[i] - kZeroTol);
        CHECK(res.x_eq[i] <= sys.hi[i] + kZeroTol);
    }
}

TEST_CASE("box solve reports non-convergence within a tiny budget") {
    const BoxSystem sys = random_box(4, 2);
    SolverOptions opts;
    opts.max_steps = 2;
    const SolveResult res = box_solve(sys, RealVector(4, 0.0), opts);
    CHECK(!res.converged);
}

TEST_CASE("box dynamics agree with the projected-gradient oracle") {
    for (std::uint64_t seed : {1, 7, 23, 40}) {
        const BoxSystem sys = random_box(6, seed);
        const SolveResult dyn = box_solve(sys, RealVector(6, 0.0), {});
        ProxOptions oracle_opts;
        oracle_opts.tol = 1e-10;
        oracle_opts.max_iters = 500000;
        const SolveResult pg = box_projected_gradient(sys, oracle_opts);
        REQUIRE(dyn.converged);
        REQUIRE(pg.converged);
        CHECK(rel_l2(dyn.x_eq, pg.x_eq) < 1e-6);
    }
}
