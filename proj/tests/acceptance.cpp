// Acceptance suite: one case per criterion, each printing a single
// PASS/FAIL line with the measured quantities and elapsed time. The headline
// Monte-Carlo run (criterion 12) is the long one and can be filtered with
// --test-case=*criterion_12*.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "rmt/gemm.hpp"
#include "rmt/integrals.hpp"
#include "rmt/linalg.hpp"
#include "rmt/quadrature.hpp"
#include "rmt/resolvent.hpp"
#include "rmt/rng.hpp"
#include "rmt/schur_chain.hpp"
#include "rmt/self_consistent.hpp"
#include "rmt/universality.hpp"

using namespace rmt;
namespace fs = std::filesystem;

namespace {

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int criterion, bool pass, double seconds, const std::string& detail) {
    std::printf("[criterion %2d] %s  (%.1fs)  %s\n", criterion, pass ? "PASS" : "FAIL", seconds,
                detail.c_str());
    std::fflush(stdout);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

} // namespace

TEST_CASE("criterion_01 fixed point closed form") {
    Stopwatch sw;
    double worst = 0.0;
    for (double t : {1e-3, 0.1, 1.0}) {
        const HermitisationFactorization f = factorize(ComplexMatrix(16, 16), 0.0);
        const FixedPointResult fp = solve_eta_star(f, t);
        worst = std::max(worst, std::abs(fp.eta_star - std::sqrt(t)) / std::sqrt(t));
    }
    const bool pass = worst <= 1e-12;
    report(1, pass, sw.seconds(), "max |eta*-sqrt(t)|/sqrt(t) = " + fmt(worst));
    CHECK(pass);
    CHECK(sw.seconds() < 1.0);
}

TEST_CASE("criterion_02 diagnostics vs dense inverse") {
    Stopwatch sw;
    Rng rng(1002, 0, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 4 + trial % 29; // up to 32
        const ComplexMatrix a = oracle::random_matrix(rng, n);
        const cx z(0.2 * rng.uniform(), 0.2 * rng.uniform());
        const double eta = 0.3 + rng.uniform();

        const HermitisationFactorization f = factorize(a, z);
        const ResolventDiagnostics d = diagnostics(f, eta, 1.0);

        // dense route through (Herm - i eta)^{-1}
        const ComplexMatrix herm = hermitise(a, z);
        const ComplexMatrix g =
            solve_shifted(herm, cx(0.0, eta), ComplexMatrix::identity(2 * n));
        ComplexMatrix e(2 * n, 2 * n), estar(2 * n, 2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            e(i, n + i) = 1.0;
            estar(n + i, i) = 1.0;
        }
        const double invn = 1.0 / static_cast<double>(n);
        const double g_dense = 0.5 * (g.trace() * invn).imag();
        const double alpha_dense = -(gemm(gemm(g, e), gemm(g, estar)).trace() * invn).real();
        const cx beta_dense = (gemm(gemm(g, g), estar).trace() * invn) / cx(0.0, 2.0);
        const ComplexMatrix gg =
            gemm(g, ComplexMatrix::identity(2 * n) - cx(0.0, eta) * g);
        const double gamma_dense = (gg.trace() * invn / cx(0.0, 4.0 * eta)).real();
        ComplexMatrix shifted(a);
        shifted.shift_diagonal(z);
        ComplexMatrix hb = gemm(shifted, shifted, Op::None, Op::Adjoint);
        for (std::size_t i = 0; i < n; ++i) hb(i, i) += eta * eta;
        const ComplexMatrix hs = gemm(inverse(hb), shifted);
        const cx delta_dense = gemm(hs, hs).trace() * invn;

        worst = std::max(worst, std::abs(d.g - g_dense) / std::abs(g_dense));
        worst = std::max(worst, std::abs(d.alpha - alpha_dense) / std::abs(alpha_dense));
        worst = std::max(worst,
                         std::abs(d.beta - beta_dense) / std::max(1e-3, std::abs(beta_dense)));
        worst = std::max(worst, std::abs(d.gamma - gamma_dense) / std::abs(gamma_dense));
        worst = std::max(worst,
                         std::abs(d.delta - delta_dense) / std::max(1e-3, std::abs(delta_dense)));
    }
    const bool pass = worst <= 1e-9;
    report(2, pass, sw.seconds(), "worst relative deviation = " + fmt(worst) + " (100 matrices)");
    CHECK(pass);
    CHECK(sw.seconds() < 30.0);
}

TEST_CASE("criterion_03 log-determinant identity") {
    Stopwatch sw;
    Rng rng(1003, 0, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + trial % 7; // up to 8
        const ComplexMatrix a = oracle::random_matrix(rng, n);
        const double tcut = trial % 2 == 0 ? 10.0 : 50.0;
        worst = std::max(worst, logdet_identity_check(a, cx(0.1, -0.07), tcut));
    }
    const bool pass = worst <= 1e-8;
    report(3, pass, sw.seconds(), "max residual = " + fmt(worst) + " (20 matrices)");
    CHECK(pass);
    CHECK(sw.seconds() < 10.0);
}

TEST_CASE("criterion_04 spectrum-logdet identity on a grid") {
    Stopwatch sw;
    Rng rng(1004, 0, 0);
    const ComplexMatrix a = oracle::random_matrix(rng, 3, 0.4);
    auto bump = [](cx zz) {
        const double r2 = std::norm(zz) / 16.0;
        return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
    };
    const GirkoResult g = girko_check(a, bump, 0.0, 4.5, 400);
    const double rel = g.residual / std::abs(g.lhs);
    const bool pass = rel <= 1e-2;
    report(4, pass, sw.seconds(),
           "lhs = " + fmt(g.lhs) + ", rhs = " + fmt(g.rhs) + ", rel residual = " + fmt(rel));
    CHECK(pass);
    CHECK(sw.seconds() < 120.0);
}

TEST_CASE("criterion_05 partial-Schur round trip and Jacobian") {
    Stopwatch sw;
    Rng rng(1005, 0, 0);
    double worst_rt = 0.0;
    std::size_t done = 0, tried = 0;
    while (done < 500 && tried < 520) {
        const std::size_t n = 3 + tried % 6;
        const ComplexMatrix a = oracle::random_matrix(rng, n);
        ++tried;
        try {
            const SchurStepInverse inv = schur_step_inverse(a, tried % n);
            const ComplexMatrix back = schur_step_forward(inv.z, inv.v, inv.w, inv.m_small);
            worst_rt = std::max(worst_rt, (back - a).norm_max());
            ++done;
        } catch (const DegenerateSpectrum&) {
        }
    }

    double worst_fd = 0.0;
    int fd_done = 0;
    for (int trial = 0; fd_done < 50 && trial < 150; ++trial) {
        const std::size_t n = 2 + trial % 2;
        const std::size_t k = 1 + trial % std::min<std::size_t>(2, n - 1);
        SchurChain chain;
        chain.n = n;
        chain.k = k;
        for (std::size_t i = 0; i < k; ++i) {
            chain.z_list.push_back(rng.gaussian());
            CVec v = rng.sphere_point(n - i);
            const double a0 = std::abs(v[0]);
            if (a0 > 0) {
                const cx ph = std::conj(v[0]) / a0;
                for (auto& x : v) x *= ph;
                v[0] = cx(v[0].real(), 0.0);
            }
            chain.v_list.push_back(v);
            CVec w(n - i - 1);
            for (auto& x : w) x = rng.gaussian();
            chain.w_list.push_back(w);
        }
        chain.m_k = oracle::random_matrix(rng, n - k);
        const double jf = jacobian(chain);
        if (jf < 1e-5) continue;
        worst_fd = std::max(worst_fd, std::abs(jacobian_fd(chain) - jf) / jf);
        ++fd_done;
    }
    const bool pass = done == 500 && worst_rt <= 1e-9 && fd_done == 50 && worst_fd <= 1e-4;
    report(5, pass, sw.seconds(),
           "500 round trips max = " + fmt(worst_rt) + ", 50 FD Jacobians max rel = " +
               fmt(worst_fd));
    CHECK(pass);
    CHECK(sw.seconds() < 60.0);
}

TEST_CASE("criterion_06 k-point integral identity (paired Monte Carlo)") {
    Stopwatch sw;
    const ComplexMatrix a(2, 2);
    const KPointComparison cmp = kpoint_identity_mc(2, 1, 1.0, a, {cx(0.0)}, 80000, 1006);
    const double combined = std::hypot(cmp.lhs_stderr, cmp.rhs_stderr);
    const double diff = std::abs(cmp.lhs_estimate - cmp.rhs_estimate);
    const double rel_stderr =
        std::max(cmp.lhs_stderr, cmp.rhs_stderr) / std::abs(cmp.lhs_estimate);
    const bool pass = diff <= 3.0 * combined && rel_stderr <= 0.03 && !cmp.inconclusive;
    report(6, pass, sw.seconds(),
           "lhs = " + fmt(cmp.lhs_estimate) + " +- " + fmt(cmp.lhs_stderr) + ", rhs = " +
               fmt(cmp.rhs_estimate) + " +- " + fmt(cmp.rhs_stderr) + ", diff/combined = " +
               fmt(diff / combined));
    CHECK(pass);
    CHECK(sw.seconds() < 300.0);
}

TEST_CASE("criterion_07 sphere-integral reduction") {
    Stopwatch sw;
    double worst_closed = 0.0;
    for (std::size_t n : {std::size_t(1), std::size_t(2), std::size_t(4)}) {
        auto fhat = gaussian_quadratic_fhat(std::vector<double>(n, 1.0));
        const double got = sphere_integral_reduce(
            fhat, static_cast<double>(n), std::pow(M_PI, static_cast<double>(n) - 1.0), 1e-9);
        worst_closed =
            std::max(worst_closed, std::abs(got - sphere_surface_volume(n) * std::exp(-1.0)));
    }
    Rng rng(1007, 0, 0);
    std::vector<double> eigs(8);
    for (auto& e : eigs) e = 0.3 + rng.uniform();
    auto fhat = gaussian_quadratic_fhat(eigs);
    const double reduced = sphere_integral_reduce(fhat, 8.0, std::pow(M_PI, 7.0), 1e-9);
    auto f = [&eigs](const CVec& u) {
        double q = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) q += eigs[i] * std::norm(u[i]);
        return std::exp(-q);
    };
    const SphereMc mc = sphere_integral_mc(8, f, 1000000, 1008);
    const bool pass = worst_closed <= 1e-8 && std::abs(reduced - mc.mean) <= 3.0 * mc.stderr_;
    report(7, pass, sw.seconds(),
           "closed-form max err = " + fmt(worst_closed) + ", MC deviation = " +
               fmt(std::abs(reduced - mc.mean)) + " (3se = " + fmt(3.0 * mc.stderr_) + ")");
    CHECK(pass);
    CHECK(sw.seconds() < 60.0);
}

TEST_CASE("criterion_08 sphere-normalizer contour formula vs Monte Carlo") {
    Stopwatch sw;
    Rng rng(1009, 0, 0);
    const std::size_t m = 8;
    const ComplexMatrix a = oracle::random_matrix(rng, m, 1.0 / std::sqrt(double(m)));
    const cx w(0.2, 0.1);
    const KContourResult kc = k_contour_formula(a, w, 0.7, 1.0);
    const KSphereMcResult mc = k_tilde_sphere_mc(a, w, 1.0, 500000, 1010);
    const double diff = std::abs(kc.value - mc.value);
    const bool pass = diff <= 3.0 * mc.stderr_ && mc.stderr_ / mc.value <= 0.012;
    report(8, pass, sw.seconds(),
           "contour = " + fmt(kc.value) + ", MC = " + fmt(mc.value) + " +- " + fmt(mc.stderr_));
    CHECK(pass);
    CHECK(sw.seconds() < 120.0);
}

TEST_CASE("criterion_09 characteristic-polynomial duality") {
    Stopwatch sw;
    Rng rng(1011, 0, 0);
    const ComplexMatrix a = oracle::random_matrix(rng, 4, 0.5);
    const DualityResult d = char_poly_duality_k1(a, cx(0.3, 0.0), 0.5, 150000, 1012);
    const double diff = std::abs(d.gaussian_mc - d.dual_integral);
    const bool pass = diff <= 3.0 * d.mc_stderr;
    report(9, pass, sw.seconds(),
           "MC = " + fmt(d.gaussian_mc) + " +- " + fmt(d.mc_stderr) + ", quadrature = " +
               fmt(d.dual_integral) + ", diff/se = " + fmt(diff / d.mc_stderr));
    CHECK(pass);
    CHECK(sw.seconds() < 300.0);
}

TEST_CASE("criterion_10 self-consistent solver") {
    Stopwatch sw;
    double worst_res = 0.0;
    for (double zr : {0.0, 0.3, 0.5, 0.8})
        for (double eta : {1e-6, 1e-3, 0.1, 1.0, 100.0})
            worst_res = std::max(worst_res, solve_cubic_m(cx(zr, 0.2 * zr), eta).residual);

    const SelfConsistentSolution s_small = solve_cubic_m(cx(0.5, 0.0), 1e-6);
    const double m_err = std::abs(s_small.m - cx(0.0, std::sqrt(0.75)));
    const SelfConsistentSolution s_u = solve_cubic_m(cx(0.5, 0.0), 1e-3);
    const double u_err = std::abs(s_u.u - (1.0 - 1e-3 / std::sqrt(0.75)));

    double fitted_k = 0.0;
    for (double eta : {0.2, 0.1, 0.05}) {
        const PredictedDiagnostics p = predicted_diagnostics(cx(0.4, 0.0), eta);
        fitted_k = std::max(fitted_k, std::abs(p.sigma - 1.0) / eta);
    }
    const bool pass = worst_res <= 1e-12 && m_err <= 1e-5 && u_err <= 1e-5;
    report(10, pass, sw.seconds(),
           "cubic residual = " + fmt(worst_res) + ", m limit err = " + fmt(m_err) +
               ", u asymptote err = " + fmt(u_err) + ", |sigma-1| <= K eta with K = " +
               fmt(fitted_k));
    CHECK(pass);
    CHECK(sw.seconds() < 1.0);
}

TEST_CASE("criterion_11 local-law residual envelopes") {
    Stopwatch sw;
    const std::size_t n = 256;
    const double eta = 1.0 / std::sqrt(static_cast<double>(n));
    const MatrixGenerator gen = MatrixGenerator::ginibre(n);
    const LocalLawReport rep = measure_local_law(gen, n, {cx(0.3, 0.0)}, {eta}, 20, 1013);
    REQUIRE(rep.cells.size() == 1);
    const LocalLawCell& cell = rep.cells[0];
    const bool pass = cell.median_single_i <= cell.envelope_single &&
                      cell.median_double <= cell.envelope_double &&
                      rep.failed_samples == 0;
    report(11, pass, sw.seconds(),
           "median single = " + fmt(cell.median_single_i) + " (envelope " +
               fmt(cell.envelope_single) + "), median double = " + fmt(cell.median_double) +
               " (envelope " + fmt(cell.envelope_double) + ")");
    CHECK(pass);
    CHECK(sw.seconds() < 600.0);
}

TEST_CASE("criterion_12 headline universality bands") {
    Stopwatch sw;
    bool all_pass = true;
    std::string detail;
    for (const std::string& gen : {std::string("ginibre"), std::string("bernoulli")}) {
        ExperimentConfig cfg;
        cfg.generator = gen;
        cfg.n = 1024;
        cfg.t = 0.4;
        cfg.z = cx(0.0, 0.0);
        cfg.samples = 200;
        cfg.window_radius = 6.0;
        cfg.bins = 40;
        cfg.seed = 0x5EED;
        const ExperimentReport rep = universality_experiment(cfg);
        all_pass = all_pass && rep.pass;
        detail += gen + ": k1 " + fmt(rep.k1.density_estimate) + " +- " +
                  fmt(rep.k1.density_stderr) + " vs 1/pi" + (rep.k1_pass ? " ok" : " FAIL") +
                  ", band fails " + std::to_string(rep.band_failures) + "/" +
                  std::to_string(rep.band_bins) + ", chi2 p = " + fmt(rep.chi2_p) +
                  (rep.k2_pass ? " ok" : " FAIL") + "; ";
        CHECK(rep.k1_pass);
        CHECK(rep.k2_pass);
    }
    report(12, all_pass, sw.seconds(), detail);
    CHECK(all_pass);
}

TEST_CASE("criterion_13 determinism of acceptance artifacts") {
    Stopwatch sw;
    // library level: repeated runs bit-identical
    const MatrixGenerator gen = MatrixGenerator::ginibre(64);
    const EnsembleRun r1 = sample_ensemble(gen, 64, 0.5, 8, 0x5EED);
    const EnsembleRun r2 = sample_ensemble(gen, 64, 0.5, 8, 0x5EED);
    bool identical = true;
    for (std::size_t s = 0; s < 8; ++s)
        if (r1.spectra[s] != r2.spectra[s]) identical = false;

    // CLI level: byte-identical artifacts
    const fs::path out1 = fs::temp_directory_path() / "rmt_acc_det1";
    const fs::path out2 = fs::temp_directory_path() / "rmt_acc_det2";
    fs::remove_all(out1);
    fs::remove_all(out2);
    const std::string common = " experiment --generator ginibre --N 128 --t 0.5 --samples 20 "
                               "--bins 16 --window 5 --seed 7 --out ";
    const int c1 = std::system((std::string(RMTLAB_BIN) + common + out1.string() +
                                " > /dev/null 2>&1")
                                   .c_str());
    const int c2 = std::system((std::string(RMTLAB_BIN) + common + out2.string() +
                                " > /dev/null 2>&1")
                                   .c_str());
    bool bytes_equal = WIFEXITED(c1) && WIFEXITED(c2) && WEXITSTATUS(c1) == WEXITSTATUS(c2);
    std::size_t files = 0;
    for (const char* name :
         {"eigenvalues.csv", "correlation_k1.csv", "correlation_k2.csv", "report.json",
          "audit.csv"}) {
        std::ifstream f1(out1 / name, std::ios::binary), f2(out2 / name, std::ios::binary);
        std::ostringstream s1, s2;
        s1 << f1.rdbuf();
        s2 << f2.rdbuf();
        bytes_equal = bytes_equal && f1.good() && f2.good() && s1.str() == s2.str() &&
                      !s1.str().empty();
        ++files;
    }
    const bool pass = identical && bytes_equal && files == 5;
    report(13, pass, sw.seconds(),
           std::string("library spectra identical: ") + (identical ? "yes" : "no") +
               ", CLI artifacts byte-identical: " + (bytes_equal ? "yes" : "no"));
    CHECK(pass);
}
