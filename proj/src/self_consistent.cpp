#include "rmt/self_consistent.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "rmt/linalg.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rmt {

namespace {

cx cubic_poly(cx z, double eta, cx m) {
    const double z2 = std::norm(z);
    const cx ieta(0.0, eta);
    return m * m * m + 2.0 * ieta * m * m + (1.0 - eta * eta - z2) * m + ieta;
}

cx cubic_poly_deriv(cx z, double eta, cx m) {
    const double z2 = std::norm(z);
    const cx ieta(0.0, eta);
    return 3.0 * m * m + 4.0 * ieta * m + (1.0 - eta * eta - z2);
}

double defining_residual(cx z, double eta, cx m) {
    const cx q = cx(0.0, eta) + m;
    return std::abs(-1.0 / m - (q - std::norm(z) / q));
}

} // namespace

SelfConsistentSolution solve_cubic_m(cx z, double eta) {
    if (eta <= 0.0) throw InvalidInput("solve_cubic_m: eta must be positive");
    const double z2 = std::norm(z);
    const cx c2 = cx(0.0, 2.0 * eta);
    const cx c1 = cx(1.0 - eta * eta - z2, 0.0);
    const cx c0 = cx(0.0, eta);

    ComplexMatrix comp(3, 3);
    comp(1, 0) = 1.0;
    comp(2, 1) = 1.0;
    comp(0, 2) = -c0;
    comp(1, 2) = -c1;
    comp(2, 2) = -c2;
    const SpectrumResult roots = eigenvalues_complex(comp);

    cx best(0.0, 0.0);
    double best_residual = 1e300;
    bool found = false;
    for (cx r : roots.eigenvalues) {
        // polish on the cubic before judging
        for (int it = 0; it < 8; ++it) {
            const cx p = cubic_poly(z, eta, r);
            const cx dp = cubic_poly_deriv(z, eta, r);
            if (std::abs(dp) == 0.0) break;
            const cx step = p / dp;
            r -= step;
            if (std::abs(step) < 1e-17 * std::max(1.0, std::abs(r))) break;
        }
        if (r.imag() <= 0.0) continue;
        const double res = defining_residual(z, eta, r);
        if (!found || res < best_residual) {
            best = r;
            best_residual = res;
            found = true;
        }
    }
    if (!found) {
        std::string all;
        for (cx r : roots.eigenvalues)
            all += " (" + std::to_string(r.real()) + "," + std::to_string(r.imag()) + ")";
        throw NoSolution("solve_cubic_m: no root with positive imaginary part; candidates:" + all);
    }

    SelfConsistentSolution sol;
    sol.z = z;
    sol.eta = eta;
    sol.m = best;
    sol.u = best / (cx(0.0, eta) + best);
    sol.residual = best_residual;
    return sol;
}

ComplexMatrix m1_matrix(const SelfConsistentSolution& sol) {
    ComplexMatrix m(2, 2);
    m(0, 0) = sol.m;
    m(1, 1) = sol.m;
    m(0, 1) = -sol.z * sol.u;
    m(1, 0) = -std::conj(sol.z) * sol.u;
    return m;
}

BlockScalar block_mul(const BlockScalar& x, const BlockScalar& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c,
            x.c * y.b + x.d * y.d};
}

StabilityOperator stability_operator(cx z, double eta1, double eta2) {
    StabilityOperator op;
    op.eta1 = eta1;
    op.eta2 = eta2;
    op.sol1 = solve_cubic_m(z, eta1);
    op.sol2 = solve_cubic_m(z, eta2);
    const cx m1 = op.sol1.m, m2 = op.sol2.m;
    const cx u1 = op.sol1.u, u2 = op.sol2.u;
    const double z2 = std::norm(z);

    op.t1 = ComplexMatrix(2, 2);
    op.t1(0, 0) = 1.0 - z2 * u1 * u2;
    op.t1(1, 1) = 1.0 - z2 * u1 * u2;
    op.t1(0, 1) = -m1 * m2;
    op.t1(1, 0) = -m1 * m2;

    op.t2 = ComplexMatrix(2, 2);
    op.t2(0, 0) = z * m2 * u1;
    op.t2(0, 1) = z * m1 * u2;
    op.t2(1, 0) = std::conj(z) * m1 * u2;
    op.t2(1, 1) = std::conj(z) * m2 * u1;

    const cx dett1 = op.t1(0, 0) * op.t1(1, 1) - op.t1(0, 1) * op.t1(1, 0);
    ComplexMatrix t1inv(2, 2);
    if (std::abs(dett1) == 0.0)
        throw NoSolution("stability_operator: T1 singular (criticality)");
    t1inv(0, 0) = op.t1(1, 1) / dett1;
    t1inv(1, 1) = op.t1(0, 0) / dett1;
    t1inv(0, 1) = -op.t1(0, 1) / dett1;
    t1inv(1, 0) = -op.t1(1, 0) / dett1;
    const double t1inv_norm = t1inv.norm_fro();
    if (t1inv_norm > 1e14)
        throw NoSolution("stability_operator: ||T1^{-1}|| exceeds 1e14 (near criticality)");

    op.b_4x4 = ComplexMatrix(4, 4);
    op.b_inverse_4x4 = ComplexMatrix(4, 4);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            op.b_4x4(i, j) = op.t1(i, j);
            op.b_4x4(2 + i, j) = op.t2(i, j);
            op.b_inverse_4x4(i, j) = t1inv(i, j);
        }
    op.b_4x4(2, 2) = 1.0;
    op.b_4x4(3, 3) = 1.0;
    op.b_inverse_4x4(2, 2) = 1.0;
    op.b_inverse_4x4(3, 3) = 1.0;
    // lower-left block: -T2 T1^{-1}
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            cx s = 0.0;
            for (std::size_t k = 0; k < 2; ++k) s += op.t2(i, k) * t1inv(k, j);
            op.b_inverse_4x4(2 + i, j) = -s;
        }
    return op;
}

BlockScalar stability_apply(cx z, double eta1, double eta2, const BlockScalar& x) {
    const SelfConsistentSolution s1 = solve_cubic_m(z, eta1);
    const SelfConsistentSolution s2 = solve_cubic_m(z, eta2);
    const BlockScalar m1{s1.m, -z * s1.u, -std::conj(z) * s1.u, s1.m};
    const BlockScalar m2{s2.m, -z * s2.u, -std::conj(z) * s2.u, s2.m};
    const BlockScalar sx{x.d, 0.0, 0.0, x.a};
    const BlockScalar prod = block_mul(block_mul(m1, sx), m2);
    return {x.a - prod.a, x.b - prod.b, x.c - prod.c, x.d - prod.d};
}

BlockScalar m2_prediction(cx z, double eta1, double eta2, const BlockScalar& b) {
    const StabilityOperator op = stability_operator(z, eta1, eta2);
    const BlockScalar m1{op.sol1.m, -z * op.sol1.u, -std::conj(z) * op.sol1.u, op.sol1.m};
    const BlockScalar m2{op.sol2.m, -z * op.sol2.u, -std::conj(z) * op.sol2.u, op.sol2.m};
    const BlockScalar rhs = block_mul(block_mul(m1, b), m2);
    // solve [[T1,0],[T2,I]] (a d b c)^T = rhs
    const CVec vec = {rhs.a, rhs.d, rhs.b, rhs.c};
    CVec out(4, cx(0.0));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) out[i] += op.b_inverse_4x4(i, j) * vec[j];
    return {out[0], out[2], out[3], out[1]};
}

PredictedDiagnostics predicted_diagnostics(cx z, double eta) {
    const SelfConsistentSolution sol = solve_cubic_m(z, eta);
    const BlockScalar m2_e = m2_prediction(z, eta, eta, BlockScalar::e());
    const BlockScalar m2_one = m2_prediction(z, eta, eta, BlockScalar::one());

    PredictedDiagnostics p;
    p.g = sol.m.imag();

    const cx alpha_c = -m2_e.trace_with_estar();
    const cx g2_trace = m2_one.avg_trace(); // <G^2> approximation
    const cx beta_c = m2_one.trace_with_estar() / cx(0.0, 2.0);
    const cx g_trace = 2.0 * sol.m;
    const cx gamma_c = (g_trace - cx(0.0, eta) * g2_trace) / cx(0.0, 4.0 * eta);

    p.alpha = alpha_c.real();
    p.beta = beta_c;
    p.gamma = gamma_c.real();
    p.sigma = p.alpha + std::norm(p.beta) / p.gamma;
    p.sigma_alt = p.alpha * p.alpha + std::norm(p.beta) / (p.gamma * p.gamma);
    p.max_imag_leak = std::max(std::abs(alpha_c.imag()), std::abs(gamma_c.imag()));
    return p;
}

void LocalLawReport::write_csv(std::ostream& os) const {
    os << "re_z,im_z,eta,residual_single_I,residual_single_E,residual_double,envelope_single,"
          "envelope_double,samples\n";
    char buf[256];
    for (const auto& c : cells) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%zu\n",
                      c.z.real(), c.z.imag(), c.eta, c.median_single_i, c.median_single_e,
                      c.median_double, c.envelope_single, c.envelope_double, samples);
        os << buf;
    }
}

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

LocalLawReport measure_local_law(const MatrixGenerator& gen, std::size_t n,
                                 const std::vector<cx>& z_grid,
                                 const std::vector<double>& eta_grid, std::size_t samples,
                                 std::uint64_t seed) {
    if (n < 32) throw InvalidInput("measure_local_law: N must be at least 32");
    const double eta_floor = std::pow(static_cast<double>(n), -1.0 + 0.01);
    for (double eta : eta_grid)
        if (eta < eta_floor)
            throw InvalidInput("measure_local_law: eta below N^{-1+0.01}");

    LocalLawReport rep;
    rep.n = n;
    rep.samples = samples;
    rep.master_seed = seed;
    rep.sample_seeds.resize(samples);
    for (std::size_t s = 0; s < samples; ++s) rep.sample_seeds[s] = seed ^ s;

    const std::size_t ncells = z_grid.size() * eta_grid.size();
    // per-cell, per-sample residuals
    std::vector<std::vector<double>> r_i(ncells), r_e(ncells), r_es(ncells), r_d(ncells);
    for (std::size_t c = 0; c < ncells; ++c) {
        r_i[c].assign(samples, -1.0);
        r_e[c].assign(samples, -1.0);
        r_es[c].assign(samples, -1.0);
        r_d[c].assign(samples, -1.0);
    }
    std::vector<std::uint8_t> failed(samples, 0);

    // deterministic predictions are sample-independent
    std::vector<SelfConsistentSolution> sols(ncells);
    std::vector<BlockScalar> m2e(ncells);
    for (std::size_t zi = 0; zi < z_grid.size(); ++zi)
        for (std::size_t ei = 0; ei < eta_grid.size(); ++ei) {
            const std::size_t c = zi * eta_grid.size() + ei;
            sols[c] = solve_cubic_m(z_grid[zi], eta_grid[ei]);
            m2e[c] = m2_prediction(z_grid[zi], eta_grid[ei], eta_grid[ei], BlockScalar::e());
        }

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::size_t s = 0; s < samples; ++s) {
        try {
            Rng rng(seed, s, streams::kMatrixA);
            const ComplexMatrix a = gen.draw(rng);
            for (std::size_t zi = 0; zi < z_grid.size(); ++zi) {
                const HermitisationFactorization f = factorize(a, z_grid[zi]);
                for (std::size_t ei = 0; ei < eta_grid.size(); ++ei) {
                    const std::size_t c = zi * eta_grid.size() + ei;
                    const double eta = eta_grid[ei];
                    const ResolventDiagnostics dg = diagnostics(f, eta, 1.0);
                    const SingleTraces st = single_traces(f, eta);
                    const SelfConsistentSolution& sol = sols[c];
                    r_i[c][s] = std::abs(st.g_full - 2.0 * sol.m);
                    r_e[c][s] = std::abs(st.g_e - (-std::conj(z_grid[zi]) * sol.u));
                    r_es[c][s] = std::abs(st.g_estar - (-z_grid[zi] * sol.u));
                    // <G E G E*> = -alpha against the M2 prediction
                    r_d[c][s] = std::abs(cx(-dg.alpha, 0.0) - m2e[c].trace_with_estar());
                }
            }
        } catch (const Error&) {
            failed[s] = 1;
        }
    }

    rep.failed_samples = 0;
    for (auto f : failed) rep.failed_samples += f;

    const double envelope_amp = std::pow(static_cast<double>(n), 0.1);
    rep.cells.resize(ncells);
    for (std::size_t zi = 0; zi < z_grid.size(); ++zi)
        for (std::size_t ei = 0; ei < eta_grid.size(); ++ei) {
            const std::size_t c = zi * eta_grid.size() + ei;
            LocalLawCell& cell = rep.cells[c];
            cell.z = z_grid[zi];
            cell.eta = eta_grid[ei];
            std::vector<double> vi, ve, ves, vd;
            for (std::size_t s = 0; s < samples; ++s) {
                if (failed[s]) continue;
                vi.push_back(r_i[c][s]);
                ve.push_back(r_e[c][s]);
                ves.push_back(r_es[c][s]);
                vd.push_back(r_d[c][s]);
            }
            cell.median_single_i = median_of(vi);
            cell.median_single_e = median_of(ve);
            cell.median_single_estar = median_of(ves);
            cell.median_double = median_of(vd);
            cell.max_single_i = vi.empty() ? 0.0 : *std::max_element(vi.begin(), vi.end());
            cell.max_single_e = ve.empty() ? 0.0 : *std::max_element(ve.begin(), ve.end());
            cell.max_single_estar = ves.empty() ? 0.0 : *std::max_element(ves.begin(), ves.end());
            cell.max_double = vd.empty() ? 0.0 : *std::max_element(vd.begin(), vd.end());
            const double dn = static_cast<double>(n);
            cell.envelope_single = envelope_amp / (dn * cell.eta);
            cell.envelope_double = envelope_amp / (dn * cell.eta * cell.eta);
        }
    return rep;
}

} // namespace rmt
