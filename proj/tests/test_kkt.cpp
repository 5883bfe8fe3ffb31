#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "nnsa/kkt.hpp"
#include "nnsa/rng.hpp"
#include "nnsa/solvers.hpp"

using namespace nnsa;

TEST_CASE("identity-matrix solution certifies exactly") {
    const RealMatrix eye = RealMatrix::identity(2);
    const KktReport r = nnls_kkt(eye, {1.0, -1.0}, {1.0, 0.0});
    CHECK(r.stationarity == 0.0);
    CHECK(r.primal_violation == 0.0);
    CHECK(r.dual_violation == 0.0);  // lambda = x - y = [0, 1]
    CHECK(r.comp_slack == 0.0);
    CHECK(r.total == 0.0);
}

TEST_CASE("zero point with attainable descent shows a dual violation") {
    const RealMatrix a{{1.0, 0.5}, {0.5, 1.0}};
    const KktReport r = nnls_kkt(a, {1.0, 1.0}, {0.0, 0.0});
    CHECK(r.dual_violation > 0.0);  // lambda = -A^T y has a negative entry
    CHECK(r.total == r.dual_violation);
}

TEST_CASE("negative entries are reported as primal violations") {
    const RealMatrix eye = RealMatrix::identity(3);
    const KktReport r = nnls_kkt(eye, {0.0, 0.0, 0.0}, {0.0, -0.25, 0.0});
    CHECK(r.primal_violation == 0.25);
}

TEST_CASE("total is the max of the four components") {
    Philox rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        RealMatrix a(4, 3);
        RealVector y(4), x(3);
        for (std::size_t i = 0; i < 4; ++i) {
            y[i] = rng.uniform(-1.0, 1.0);
            for (std::size_t j = 0; j < 3; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
        }
        for (std::size_t j = 0; j < 3; ++j) x[j] = rng.uniform(-0.5, 1.0);
        const KktReport r = nnls_kkt(a, y, x);
        CHECK(r.total ==
              std::max({r.stationarity, r.primal_violation, r.dual_violation, r.comp_slack}));
    }
}

TEST_CASE("report is invariant under column permutation") {
    Philox rng(21);
    RealMatrix a(5, 4);
    RealVector y(5), x(4);
    for (std::size_t i = 0; i < 5; ++i) {
        y[i] = rng.uniform(-1.0, 1.0);
        for (std::size_t j = 0; j < 4; ++j) a(i, j) = rng.uniform(0.1, 1.0);
    }
    for (std::size_t j = 0; j < 4; ++j) x[j] = rng.uniform(0.0, 1.0);

    const std::size_t perm[4] = {2, 0, 3, 1};
    RealMatrix ap(5, 4);
    RealVector xp(4);
    for (std::size_t j = 0; j < 4; ++j) {
        xp[j] = x[perm[j]];
        for (std::size_t i = 0; i < 5; ++i) ap(i, j) = a(i, perm[j]);
    }
    const KktReport r0 = nnls_kkt(a, y, x);
    const KktReport r1 = nnls_kkt(ap, y, xp);
    CHECK(r1.total == doctest::Approx(r0.total).epsilon(1e-12));
    CHECK(r1.dual_violation == doctest::Approx(r0.dual_violation).epsilon(1e-12));
    CHECK(r1.comp_slack == doctest::Approx(r0.comp_slack).epsilon(1e-12));
}

TEST_CASE("small totals coincide with oracle agreement") {
    Philox rng(77);
    for (int trial = 0; trial < 8; ++trial) {
        RealMatrix a(8, 4);
        RealVector y(8);
        for (std::size_t i = 0; i < 8; ++i) {
            y[i] = rng.uniform(-1.0, 2.0);
            for (std::size_t j = 0; j < 4; ++j) a(i, j) = rng.uniform(0.0, 1.0);
        }
        const SolveResult oracle = nnls_active_set(a, y, 1e-10);
        CHECK(nnls_kkt(a, y, oracle.x_eq).total <= 1e-8);

        RealVector off = oracle.x_eq;
        off[trial % 4] += 0.05;
        CHECK(nnls_kkt(a, y, off).total > 1e-8);
    }
}

TEST_CASE("box certificate: interior optimum, compliant bound, bound violation") {
    const RealMatrix q = RealMatrix::identity(2);
    const RealVector lo{0.0, 0.0};
    const RealVector hi{1.0, 1.0};

    // interior unconstrained optimum x = q_vec
    CHECK(box_kkt(q, {0.5, 0.25}, lo, hi, {0.5, 0.25}).total == 0.0);

    // pinned at the upper bound with inward-pointing gradient: compliant
    const KktReport pinned = box_kkt(q, {1.3, 0.5}, lo, hi, {1.0, 0.5});
    CHECK(pinned.total == 0.0);  // g_0 = 1.0 - 1.3 = -0.3 at the upper bound

    // outside the box: overshoot reported as primal violation
    const KktReport outside = box_kkt(q, {0.5, 0.5}, lo, hi, {1.1, 0.5});
    CHECK(outside.primal_violation == doctest::Approx(0.1).epsilon(1e-12));
}
