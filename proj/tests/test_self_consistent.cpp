#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "rmt/gemm.hpp"
#include "rmt/self_consistent.hpp"

using namespace rmt;

TEST_CASE("cubic solution closed form at z = 0") {
    const double eta = 0.5;
    const SelfConsistentSolution s = solve_cubic_m(0.0, eta);
    const double want = 0.5 * (std::sqrt(eta * eta + 4.0) - eta);
    CHECK(s.m.real() == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(s.m.imag() == doctest::Approx(want).epsilon(1e-13));
    CHECK(s.m.imag() == doctest::Approx(0.78077640640441).epsilon(1e-10));
    CHECK(s.residual <= 1e-12);
}

TEST_CASE("small-eta asymptotics of m and u") {
    const cx z(0.5, 0.0);
    const SelfConsistentSolution s = solve_cubic_m(z, 1e-6);
    CHECK(std::abs(s.m - cx(0.0, std::sqrt(0.75))) <= 1e-5);

    const SelfConsistentSolution s2 = solve_cubic_m(z, 1e-3);
    const double u_pred = 1.0 - 1e-3 / std::sqrt(0.75);
    CHECK(std::abs(s2.u - u_pred) <= 1e-5);
}

TEST_CASE("first-order eta coefficient of m, measured") {
    // direct perturbation of the cubic gives (2|z|^2 - 1)/(2(1 - |z|^2));
    // assert the measured slope against that value
    const cx z(0.4, 0.3);
    const double z2 = std::norm(z);
    const double coef = (2.0 * z2 - 1.0) / (2.0 * (1.0 - z2));
    const double h = 1e-5;
    const SelfConsistentSolution sa = solve_cubic_m(z, h);
    const SelfConsistentSolution sb = solve_cubic_m(z, 2.0 * h);
    const double slope = (sb.m.imag() - sa.m.imag()) / h;
    CHECK(slope == doctest::Approx(coef).epsilon(1e-3));
    MESSAGE("measured first-order coefficient ", slope, " vs derived ", coef);
}

TEST_CASE("large-eta behaviour and residuals over a sweep") {
    const SelfConsistentSolution far = solve_cubic_m(cx(0.2, 0.1), 1e3);
    CHECK(std::abs(far.m - cx(0.0, 1e-3)) <= 0.01 * 1e-3);

    // continuity along an eta path at fixed z
    for (double zr : {0.0, 0.5, 0.95}) {
        cx prev{0.0, 0.0};
        bool first = true;
        double eta = 10.0;
        while (eta >= 1e-6) {
            const SelfConsistentSolution s = solve_cubic_m(cx(zr, 0.0), eta);
            CHECK(s.residual <= 1e-12);
            CHECK(s.m.imag() > 0.0);
            CHECK(std::abs(s.u) <= 1.0 + 1e-10);
            CHECK(std::abs(s.u - s.m / (cx(0.0, eta) + s.m)) <= 1e-15);
            if (!first) CHECK(std::abs(s.m - prev) <= 10.0 * 0.6 * eta + 0.05);
            prev = s.m;
            first = false;
            eta *= 0.4;
        }
    }
    CHECK_THROWS_AS(solve_cubic_m(cx(0.3, 0.0), -1.0), InvalidInput);
}

TEST_CASE("m1 matrix structure") {
    const SelfConsistentSolution s0 = solve_cubic_m(0.0, 0.7);
    const ComplexMatrix m0 = m1_matrix(s0);
    CHECK(std::abs(m0(0, 1)) == 0.0);
    CHECK(std::abs(m0(1, 0)) == 0.0);
    CHECK(m0(0, 0) == m0(1, 1));

    const cx z(0.5, 0.0);
    const SelfConsistentSolution s1 = solve_cubic_m(z, 1.0);
    const ComplexMatrix m1 = m1_matrix(s1);
    CHECK(std::abs(m1(0, 1) + 0.5 * s1.u) <= 1e-15);
    CHECK(std::abs(m1(1, 0) + 0.5 * s1.u) <= 1e-15);
}

TEST_CASE("stability operator blocks and inverse") {
    const cx z(0.5, 0.0);
    const StabilityOperator op = stability_operator(z, 1.0, 1.0);
    const ComplexMatrix prod = gemm(op.b_4x4, op.b_inverse_4x4);
    CHECK((prod - ComplexMatrix::identity(4)).norm_max() <= 1e-12);

    // z = 0: T2 vanishes and T1 couples only through m1 m2
    const StabilityOperator op0 = stability_operator(0.0, 0.5, 0.8);
    CHECK(op0.t2.norm_max() == 0.0);
    CHECK(std::abs(op0.t1(0, 0) - cx(1.0)) <= 1e-15);
    CHECK(std::abs(op0.t1(0, 1) + op0.sol1.m * op0.sol2.m) <= 1e-15);
}

TEST_CASE("4x4 representation agrees with applying the operator directly") {
    const cx z(0.3, 0.2);
    const double eta1 = 0.4, eta2 = 0.9;
    const StabilityOperator op = stability_operator(z, eta1, eta2);
    for (const BlockScalar& basis :
         {BlockScalar{1, 0, 0, 0}, BlockScalar{0, 1, 0, 0}, BlockScalar{0, 0, 1, 0},
          BlockScalar{0, 0, 0, 1}}) {
        const BlockScalar applied = stability_apply(z, eta1, eta2, basis);
        // same action through the 4x4 matrix on (a d b c)
        const CVec vec = {basis.a, basis.d, basis.b, basis.c};
        CVec out(4, cx(0.0));
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) out[i] += op.b_4x4(i, j) * vec[j];
        CHECK(std::abs(out[0] - applied.a) <= 1e-14);
        CHECK(std::abs(out[1] - applied.d) <= 1e-14);
        CHECK(std::abs(out[2] - applied.b) <= 1e-14);
        CHECK(std::abs(out[3] - applied.c) <= 1e-14);
    }
}

TEST_CASE("m2 prediction solves the stability equation") {
    const cx z(0.0, 0.0);
    const double eta = 0.6;
    const BlockScalar pred = m2_prediction(z, eta, eta, BlockScalar::e());
    // residual of B_z[X] = M1 B M1
    const SelfConsistentSolution s = solve_cubic_m(z, eta);
    const BlockScalar m1{s.m, -z * s.u, -std::conj(z) * s.u, s.m};
    const BlockScalar rhs = block_mul(block_mul(m1, BlockScalar::e()), m1);
    const BlockScalar lhs = stability_apply(z, eta, eta, pred);
    CHECK(std::abs(lhs.a - rhs.a) <= 1e-12);
    CHECK(std::abs(lhs.b - rhs.b) <= 1e-12);
    CHECK(std::abs(lhs.c - rhs.c) <= 1e-12);
    CHECK(std::abs(lhs.d - rhs.d) <= 1e-12);
}

TEST_CASE("m2 prediction against a brute-force 4x4 linear solve") {
    const cx z(0.0, 0.0);
    const double eta = 0.35;
    // assemble the 4x4 of X -> X - M1 S[X] M1 by columns and solve directly
    ComplexMatrix op4(4, 4);
    const BlockScalar cols[4] = {{1, 0, 0, 0}, {0, 0, 0, 1}, {0, 1, 0, 0}, {0, 0, 1, 0}};
    for (std::size_t c = 0; c < 4; ++c) {
        const BlockScalar out = stability_apply(z, eta, eta, cols[c]);
        op4(0, c) = out.a;
        op4(1, c) = out.d;
        op4(2, c) = out.b;
        op4(3, c) = out.c;
    }
    const SelfConsistentSolution s = solve_cubic_m(z, eta);
    const BlockScalar m1{s.m, -z * s.u, -std::conj(z) * s.u, s.m};
    const BlockScalar rhs = block_mul(block_mul(m1, BlockScalar::e()), m1);
    ComplexMatrix rhs_vec(4, 1);
    rhs_vec(0, 0) = rhs.a;
    rhs_vec(1, 0) = rhs.d;
    rhs_vec(2, 0) = rhs.b;
    rhs_vec(3, 0) = rhs.c;
    const ComplexMatrix x = lu_solve(lu_factor(op4), rhs_vec);
    const BlockScalar pred = m2_prediction(z, eta, eta, BlockScalar::e());
    CHECK(std::abs(x(0, 0) - pred.a) <= 1e-12);
    CHECK(std::abs(x(1, 0) - pred.d) <= 1e-12);
    CHECK(std::abs(x(2, 0) - pred.b) <= 1e-12);
    CHECK(std::abs(x(3, 0) - pred.c) <= 1e-12);
}

TEST_CASE("predicted diagnostics approach the small-eta limits") {
    const cx z(0.4, 0.0);
    double fitted_k = 0.0;
    for (double eta : {0.2, 0.1, 0.05}) {
        const PredictedDiagnostics p = predicted_diagnostics(z, eta);
        CHECK(p.max_imag_leak <= 1e-10);
        fitted_k = std::max(fitted_k, std::abs(p.sigma - 1.0) / eta);
        // alpha -> 1 as eta -> 0
        if (eta == 0.05) CHECK(std::abs(p.alpha - 1.0) <= 0.15);
    }
    // |sigma - 1| <= K eta with a moderate K
    CHECK(fitted_k <= 10.0);
    MESSAGE("sigma_pred linear coefficient K <= ", fitted_k);
    const PredictedDiagnostics tiny = predicted_diagnostics(z, 0.01);
    CHECK(std::abs(tiny.alpha - 1.0) <= 0.05);
    CHECK(std::abs(tiny.sigma - 1.0) <= 0.05);
}

TEST_CASE("predicted <G^2> matches the eta-derivative of predicted <G>") {
    const cx z(0.3, 0.1);
    const double eta = 0.5, h = 1e-5;
    const BlockScalar m2_one = m2_prediction(z, eta, eta, BlockScalar::one());
    const cx g2_pred = m2_one.avg_trace();
    const cx g_plus = 2.0 * solve_cubic_m(z, eta + h).m;
    const cx g_minus = 2.0 * solve_cubic_m(z, eta - h).m;
    // d<G>/dEta = i <G^2>
    const cx fd = (g_plus - g_minus) / (2.0 * h);
    CHECK(std::abs(fd - cx(0.0, 1.0) * g2_pred) <= 1e-3 * std::abs(g2_pred));
}

TEST_CASE("local-law residuals on a deterministic zero matrix") {
    const MatrixGenerator gen = MatrixGenerator::zero(32);
    const LocalLawReport rep = measure_local_law(gen, 32, {cx(0.9, 0.0)}, {1.0}, 3, 7);
    REQUIRE(rep.cells.size() == 1);
    // <G> = 2i eta <H> with H = 1/(eta^2+|z|^2); report-only closed form
    const double h = 1.0 / (1.0 + 0.81);
    const cx g_exact(0.0, 2.0 * h);
    const cx m = 2.0 * solve_cubic_m(cx(0.9, 0.0), 1.0).m;
    CHECK(rep.cells[0].median_single_i == doctest::Approx(std::abs(g_exact - m)).epsilon(1e-10));
    std::ostringstream csv;
    rep.write_csv(csv);
    CHECK(csv.str().find("residual_single_I") != std::string::npos);
}

TEST_CASE("local-law residual scaling when N doubles") {
    // at fixed eta sqrt(N) the 1/(N eta) envelope scales like 1/sqrt(N), so
    // doubling N should shrink the median by about sqrt(2)
    const double c = 1.0;
    const MatrixGenerator g128 = MatrixGenerator::ginibre(128);
    const MatrixGenerator g256 = MatrixGenerator::ginibre(256);
    const LocalLawReport r128 =
        measure_local_law(g128, 128, {cx(0.3, 0.0)}, {c / std::sqrt(128.0)}, 16, 11);
    const LocalLawReport r256 =
        measure_local_law(g256, 256, {cx(0.3, 0.0)}, {c / std::sqrt(256.0)}, 16, 11);
    const double ratio = r128.cells[0].median_single_i / r256.cells[0].median_single_i;
    MESSAGE("doubling ratio ", ratio, " (sqrt(2) expected)");
    CHECK(ratio >= 1.2);
}

TEST_CASE("local-law input validation") {
    const MatrixGenerator gen = MatrixGenerator::ginibre(16);
    CHECK_THROWS_AS(measure_local_law(gen, 16, {cx(0.0)}, {0.5}, 2, 1), InvalidInput);
    const MatrixGenerator gen64 = MatrixGenerator::ginibre(64);
    CHECK_THROWS_AS(measure_local_law(gen64, 64, {cx(0.0)}, {1e-4}, 2, 1), InvalidInput);
}
