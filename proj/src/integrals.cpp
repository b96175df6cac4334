#include "rmt/integrals.hpp"

#include <algorithm>
#include <cmath>

#include "rmt/gemm.hpp"
#include "rmt/generator.hpp"
#include "rmt/linalg.hpp"
#include "rmt/quadrature.hpp"
#include "rmt/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rmt {

double sphere_surface_volume(std::size_t complex_dim) {
    if (complex_dim == 0) throw InvalidInput("sphere_surface_volume: dimension 0");
    double v = 2.0;
    for (std::size_t i = 0; i < complex_dim; ++i) v *= M_PI;
    for (std::size_t i = 2; i < complex_dim; ++i) v /= static_cast<double>(i);
    return v;
}

double sphere_integral_reduce(const std::function<cx(double)>& f_hat, double decay_order,
                              double decay_const, double tol) {
    if (decay_order <= 0.0)
        throw QuadratureError("sphere_integral_reduce: fhat does not decay");
    // truncation point from the double integration-by-parts remainder
    // ~ decay_const * p (p+1) / X^{p+1}
    double x_max = 10.0;
    const double p = decay_order;
    auto remainder = [&](double x) {
        return decay_const * p * (p + 1.0) / ((p + 1.0) * std::pow(x, p + 1.0)) * 4.0;
    };
    while (remainder(x_max) > 0.25 * tol && x_max < 1e12) x_max *= 2.0;
    if (remainder(x_max) > tol)
        throw QuadratureError("sphere_integral_reduce: cannot reach tolerance by truncation");

    if (!f_hat) throw InvalidInput("sphere_integral_reduce: missing fhat");
    QuadResultC core = integrate_complex(
        [&](double x) { return std::exp(cx(0.0, x)) * f_hat(x); }, -x_max, x_max, 0.1 * tol,
        1e-13, 48);

    // integration-by-parts tail corrections with finite-difference slopes
    const double h = std::max(1e-6 * x_max, 1e-9);
    const cx gR = f_hat(x_max);
    const cx gRp = (f_hat(x_max + h) - f_hat(x_max - h)) / (2.0 * h);
    const cx gL = f_hat(-x_max);
    const cx gLp = (f_hat(-x_max + h) - f_hat(-x_max - h)) / (2.0 * h);
    const cx eiR = std::exp(cx(0.0, x_max));
    const cx eiL = std::exp(cx(0.0, -x_max));
    const cx tail_right = cx(0.0, 1.0) * eiR * gR - eiR * gRp;
    const cx tail_left = -cx(0.0, 1.0) * eiL * gL + eiL * gLp;

    return (core.value + tail_right + tail_left).real();
}

std::function<cx(double)> gaussian_quadratic_fhat(std::vector<double> b_eigs) {
    if (b_eigs.empty()) throw InvalidInput("gaussian_quadratic_fhat: empty spectrum");
    double a_shift = 0.0;
    for (double b : b_eigs)
        if (b <= 1e-12) a_shift = 2.0; // internal regularization
    const double dim = static_cast<double>(b_eigs.size());
    const double log_pi_pref = (dim - 1.0) * std::log(M_PI);
    return [b_eigs = std::move(b_eigs), a_shift, log_pi_pref](double x) {
        // e^{N a} pi^{N-1} prod (b_i + a + i x)^{-1}, with the e^{ka} factor
        // of the regularization being e^{a} for k = 1
        cx log_den(0.0, 0.0);
        for (double b : b_eigs) log_den += std::log(cx(b + a_shift, x));
        const cx lg = cx(log_pi_pref + a_shift, 0.0) - log_den;
        return std::exp(lg);
    };
}

SphereMc sphere_integral_mc(std::size_t complex_dim, const std::function<double(const CVec&)>& f,
                            std::size_t samples, std::uint64_t seed) {
    const double vol = sphere_surface_volume(complex_dim);
    std::vector<double> vals(samples);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t s = 0; s < samples; ++s) {
        Rng rng(seed, s, streams::kSphere);
        vals[s] = f(rng.sphere_point(complex_dim));
    }
    double m = 0.0;
    for (double v : vals) m += v;
    m /= static_cast<double>(samples);
    double var = 0.0;
    for (double v : vals) var += (v - m) * (v - m);
    var /= static_cast<double>(samples - 1);
    SphereMc out;
    out.mean = vol * m;
    out.stderr_ = vol * std::sqrt(var / static_cast<double>(samples));
    return out;
}

KContourResult k_contour_formula(const ComplexMatrix& a_proj, cx w, double eta, double t,
                                 std::size_t ambient_n) {
    if (eta <= 0.0 || t <= 0.0) throw InvalidInput("k_contour_formula: eta, t must be positive");
    const std::size_t m = a_proj.rows();
    const double dn = static_cast<double>(ambient_n == 0 ? m : ambient_n);

    ComplexMatrix shifted(a_proj);
    shifted.shift_diagonal(w);
    const SvdResult sv = svd_via_hermitisation(shifted);

    // the value is independent of the representation eta, but the p-integral
    // cancels down from O(1) by e^{-(N/t)(eta^2 + s_min^2)}; keep that within
    // double precision by capping the representation scale
    eta = std::min(eta, std::max(3.0 * std::sqrt(t / dn), 1e-8));
    const double smin = sv.singular_values.empty() ? 0.0 : sv.singular_values.back();
    if ((dn / t) * smin * smin > 25.0)
        throw QuadratureError(
            "k_contour_formula: cancellation beyond double precision (N/t s_min^2 = " +
            std::to_string((dn / t) * smin * smin) + ")");

    const double e2 = eta * eta;
    std::vector<double> d(m);
    double logdet = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        d[i] = 1.0 / (e2 + sv.singular_values[i] * sv.singular_values[i]);
        logdet += std::log(e2 + sv.singular_values[i] * sv.singular_values[i]);
    }

    // truncate where prod (1 + p^2 d_i^2)^{-1/2} < 1e-16
    double p_max = 1.0;
    auto envelope_log = [&](double pp) {
        double s = 0.0;
        for (double di : d) s += std::log1p(pp * pp * di * di);
        return -0.5 * s;
    };
    while (envelope_log(p_max) > std::log(1e-16) && p_max < 1e12) p_max *= 2.0;
    if (envelope_log(p_max) > std::log(1e-10))
        throw QuadratureError("k_contour_formula: integrand decays too slowly to truncate");

    const double freq = dn / t;
    auto integrand = [&](double pp) {
        cx log_den(0.0, 0.0);
        for (double di : d) log_den += std::log(cx(1.0, pp * di));
        return std::exp(cx(0.0, freq * pp) - log_den);
    };
    // integrate period-aligned chunks so the oscillatory cancellation is
    // carried by the summation, not the subdivision heuristic
    const double period = 2.0 * M_PI / freq;
    cx acc(0.0, 0.0);
    double err = 0.0;
    std::size_t chunks = 0;
    for (double p0 = -p_max; p0 < p_max; p0 += period) {
        const double p1 = std::min(p0 + period, p_max);
        const QuadResultC q = integrate_complex(integrand, p0, p1, 1e-13, 1e-10, 24);
        acc += q.value;
        err += q.error;
        ++chunks;
    }
    const double integral = acc.real();
    if (integral <= 0.0)
        throw QuadratureError("k_contour_formula: nonpositive p-integral (quadrature failure)");

    KContourResult out;
    out.p_max = p_max;
    out.quad_error = err;
    out.imag_leak = std::abs(acc.imag()) / std::max(std::abs(acc.real()), 1e-300);
    out.log_value = -std::log(t) + 0.5 * (std::log(dn) - std::log(2.0 * M_PI * t)) +
                    dn * e2 / t - logdet + std::log(integral);
    out.value = out.log_value < 700.0 ? std::exp(out.log_value) : 0.0;
    return out;
}

KSphereMcResult k_tilde_sphere_mc(const ComplexMatrix& a_proj, cx w, double t,
                                  std::size_t samples, std::uint64_t seed,
                                  std::size_t ambient_n) {
    const std::size_t m = a_proj.rows();
    const double dn = static_cast<double>(ambient_n == 0 ? m : ambient_n);
    ComplexMatrix shifted(a_proj);
    shifted.shift_diagonal(w);

    std::vector<double> vals(samples);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t s = 0; s < samples; ++s) {
        Rng rng(seed, s, streams::kSphere);
        const CVec v = rng.sphere_point(m);
        const CVec av = mat_vec(shifted, v);
        double nrm2 = 0.0;
        for (const cx& x : av) nrm2 += std::norm(x);
        vals[s] = std::exp(-(dn / t) * nrm2);
    }
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(samples);
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= static_cast<double>(samples - 1);

    const double log_b = -std::log(t) + 0.5 * (std::log(dn) - std::log(2.0 * M_PI * t)) +
                         (static_cast<double>(m) - 1.0) * std::log(dn / (M_PI * t));
    const double pref = std::exp(log_b) * sphere_surface_volume(m);

    KSphereMcResult out;
    out.value = pref * mean;
    out.stderr_ = pref * std::sqrt(var / static_cast<double>(samples));
    out.log_value = std::log(std::max(mean, 1e-300)) + log_b +
                    std::log(sphere_surface_volume(m));
    return out;
}

NuExpectation nu_expectation(const ComplexMatrix& a_proj, cx w, double eta, double t,
                             NuStatistic stat, std::size_t samples, std::uint64_t seed,
                             std::size_t ambient_n) {
    if (eta <= 0.0 || t <= 0.0) throw InvalidInput("nu_expectation: eta, t must be positive");
    const std::size_t m = a_proj.rows();
    const double dn = static_cast<double>(ambient_n == 0 ? m : ambient_n);
    const double dm = static_cast<double>(m);

    const HermitisationFactorization f = factorize(a_proj, w);
    const double e2 = eta * eta;
    std::vector<double> d(m);
    for (std::size_t i = 0; i < m; ++i) d[i] = 1.0 / (e2 + f.s[i] * f.s[i]);

    // trace-formula targets (<.> normalized by the ambient dimension)
    const ResolventDiagnostics dg = diagnostics(f, eta, t);
    const double dim_ratio = dm / dn;
    const double alpha_t = dg.alpha * dim_ratio;
    const cx beta_t = dg.beta * dim_ratio;
    const double gamma_t = dg.gamma * dim_ratio;

    NuExpectation out;
    switch (stat) {
        case NuStatistic::AlphaForm: out.target = (t / eta) * alpha_t; break;
        case NuStatistic::BetaForm: out.target = (t / eta) * beta_t; break;
        case NuStatistic::GammaForm: out.target = (t / eta) * gamma_t; break;
        case NuStatistic::DetForm:
            out.target = t * t * (alpha_t * gamma_t + std::norm(beta_t)) / e2;
            break;
    }

    // Directions are proposed from a complex Gaussian with covariance
    // (eta^2 + |A-w|^2)^{-1}; its direction density is proportional to
    // (v*(eta^2+Q)v)^{-m}, so the self-normalized weight carries
    // m log(v*(eta^2+Q)v) on top of the tilt. Uniform draws would put
    // essentially all weight on a handful of samples once (N/t) s_max^2 is
    // large.
    std::vector<double> logw(samples);
    std::vector<cx> stat_vals(samples);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t s = 0; s < samples; ++s) {
        Rng rng(seed, s, streams::kSphere);
        CVec ghat(m); // V-basis components of the proposal direction
        double norm2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            ghat[i] = rng.gaussian() * std::sqrt(d[i]);
            norm2 += std::norm(ghat[i]);
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& x : ghat) x *= inv;

        // V* v = ghat, U* v = W* ghat
        CVec uv(m, cx(0.0));
        for (std::size_t j = 0; j < m; ++j) {
            const cx* wc = f.w.col(j);
            cx acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) acc += std::conj(wc[i]) * ghat[i];
            uv[j] = acc; // (W* ghat)_j = sum_i conj(W_ij) ghat_i
        }

        double q = 0.0, prop = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double a2 = std::norm(ghat[i]);
            q += f.s[i] * f.s[i] * a2;
            prop += (e2 + f.s[i] * f.s[i]) * a2;
        }
        logw[s] = -(dn / t) * q + dm * std::log(prop);

        double vhv = 0.0, vhtv = 0.0;
        cx vhsv = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            vhv += d[i] * std::norm(uv[i]);
            vhtv += d[i] * std::norm(ghat[i]);
            vhsv += std::conj(uv[i]) * d[i] * f.s[i] * ghat[i];
        }
        switch (stat) {
            case NuStatistic::AlphaForm: stat_vals[s] = eta * vhv; break;
            case NuStatistic::BetaForm: stat_vals[s] = vhsv; break;
            case NuStatistic::GammaForm: stat_vals[s] = eta * vhtv; break;
            case NuStatistic::DetForm:
                stat_vals[s] = e2 * vhv * vhtv + std::norm(vhsv);
                break;
        }
    }

    const double wmax = *std::max_element(logw.begin(), logw.end());
    double wsum = 0.0, w2sum = 0.0;
    cx acc = 0.0;
    std::vector<double> wv(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        wv[s] = std::exp(logw[s] - wmax);
        wsum += wv[s];
        w2sum += wv[s] * wv[s];
        acc += wv[s] * stat_vals[s];
    }
    out.mean = acc / wsum;
    out.ess = wsum * wsum / w2sum;
    if (out.ess < 10.0)
        throw UnreliableEstimate("nu_expectation: effective sample size too small", out.ess);
    out.low_ess_warning = out.ess < 100.0;
    double var = 0.0;
    for (std::size_t s = 0; s < samples; ++s)
        var += wv[s] * wv[s] * std::norm(stat_vals[s] - out.mean);
    out.stderr_ = std::sqrt(var) / wsum;
    return out;
}

DualityResult char_poly_duality_k1(const ComplexMatrix& a_proj, cx z_eval, double t,
                                   std::size_t samples, std::uint64_t seed,
                                   std::size_t ambient_n) {
    const std::size_t n = a_proj.rows();
    if (n == 0 || n > 32) throw InvalidInput("char_poly_duality_k1: dimension out of range");
    if (t <= 0.0) throw InvalidInput("char_poly_duality_k1: t must be positive");
    const double dn = static_cast<double>(ambient_n == 0 ? n : ambient_n);
    const double variance = t / dn;

    // Monte Carlo of E|det(A + B - z)|^2 in log space
    std::vector<double> logdets(samples);
    const double scale = std::sqrt(variance);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t s = 0; s < samples; ++s) {
        Rng rng(seed, s, streams::kGauss);
        ComplexMatrix msample(a_proj);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) msample(i, j) += scale * rng.gaussian();
        msample.shift_diagonal(z_eval);
        double ld;
        try {
            ld = lu_factor(std::move(msample)).log_abs_det();
        } catch (const SingularMatrix&) {
            ld = -345.0; // exp(2 ld) underflows to 0 as it should
        }
        logdets[s] = 2.0 * ld;
    }
    const double lmax = *std::max_element(logdets.begin(), logdets.end());
    double msum = 0.0;
    for (double l : logdets) msum += std::exp(l - lmax);
    const double mean_scaled = msum / static_cast<double>(samples);
    double var = 0.0;
    for (double l : logdets) {
        const double dvv = std::exp(l - lmax) - mean_scaled;
        var += dvv * dvv;
    }
    var /= static_cast<double>(samples - 1);

    DualityResult out;
    out.variance = variance;
    out.log_gaussian_mc = lmax + std::log(mean_scaled);
    out.gaussian_mc = std::exp(out.log_gaussian_mc);
    out.mc_stderr = std::exp(lmax) * std::sqrt(var / static_cast<double>(samples));

    // dual side: (1/(pi v)) int e^{-|x|^2/v} det(|x|^2 + |A - z|^2) dx by
    // tensor Gauss-Hermite; exact since the integrand is polynomial in
    // (Re x, Im x)
    ComplexMatrix shifted(a_proj);
    shifted.shift_diagonal(z_eval);
    const SvdResult sv = svd_via_hermitisation(shifted);
    const GaussHermite gh = gauss_hermite(n + 6);

    double acc_max = -1e300;
    std::vector<double> terms;
    terms.reserve(gh.nodes.size() * gh.nodes.size());
    for (std::size_t i = 0; i < gh.nodes.size(); ++i)
        for (std::size_t j = 0; j < gh.nodes.size(); ++j) {
            const double r = variance * (gh.nodes[i] * gh.nodes[i] + gh.nodes[j] * gh.nodes[j]);
            double logdet = 0.0;
            for (double s : sv.singular_values) logdet += std::log(r + s * s);
            const double term = std::log(gh.weights[i]) + std::log(gh.weights[j]) + logdet;
            terms.push_back(term);
            acc_max = std::max(acc_max, term);
        }
    double total = 0.0;
    for (double term : terms) total += std::exp(term - acc_max);
    // (1/(pi v)) * v * (GH sum over e^{-xi1^2 - xi2^2}) = sum / pi
    out.log_dual_integral = acc_max + std::log(total) - std::log(M_PI);
    out.dual_integral = std::exp(out.log_dual_integral);
    return out;
}

PredictorResult asymptotic_predictors_k1(const ComplexMatrix& a, cx z, double t, cx z_offset,
                                         const CVec& v1) {
    const std::size_t n = a.rows();
    if (v1.size() != n) throw InvalidInput("asymptotic_predictors_k1: v dimension mismatch");
    const double dn = static_cast<double>(n);

    const HermitisationFactorization f = factorize(a, z);

    // fixed point of t <H(eta)> = 1 by bisection + Newton (local copy to
    // avoid a dependency on the lab module)
    double lo = 1e-6 * t, hi = 1e6 * t;
    while (t * f.h_trace(lo) - 1.0 <= 0.0 && lo > 1e-280) lo *= 0.125;
    while (t * f.h_trace(hi) - 1.0 >= 0.0 && hi < 1e280) hi *= 8.0;
    double eta = 0.5 * (lo + hi);
    for (int it = 0; it < 300; ++it) {
        eta = 0.5 * (lo + hi);
        if (t * f.h_trace(eta) - 1.0 > 0.0)
            lo = eta;
        else
            hi = eta;
        if (hi - lo < 1e-15 * eta) break;
    }
    const ResolventDiagnostics dg = diagnostics(f, eta, t);

    PredictorResult out;
    out.eta_star = eta;
    out.sigma_star = dg.sigma;
    out.gamma_star = dg.gamma;
    out.phi = dg.phi;

    // psi = exp{ -sqrt(N/sigma) <G Z> - Re(conj(tau) z1^2) + |z1|^2 }
    const SingleTraces st = single_traces(f, eta);
    const double g_z_trace = 2.0 * (std::conj(z_offset) * st.g_estar).real();
    const double log_psi = -std::sqrt(dn / dg.sigma) * g_z_trace -
                           (std::conj(dg.tau) * z_offset * z_offset).real() +
                           std::norm(z_offset);
    out.psi = std::exp(log_psi);

    // |det V* G V| = eta^2 (v*Hv)(v*Htv) + |v*H(A-z)v|^2 at eta_star
    const CVec uv = adj_vec(f.u, v1);
    const CVec vv = adj_vec(f.v, v1);
    const double e2 = eta * eta;
    double vhv = 0.0, vhtv = 0.0;
    cx vhsv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = 1.0 / (e2 + f.s[i] * f.s[i]);
        vhv += d * std::norm(uv[i]);
        vhtv += d * std::norm(vv[i]);
        vhsv += std::conj(uv[i]) * d * f.s[i] * vv[i];
    }
    out.det_factor = e2 * vhv * vhtv + std::norm(vhsv);

    const double log_rho_gin = -std::log(M_PI); // 1-point kernel determinant
    const double log_det_ratio =
        std::log(e2 * out.det_factor) - std::log(t * t * dg.gamma * dg.sigma);
    out.log_f_pred = 0.5 * std::log(t * t * t * dg.gamma / e2) + log_rho_gin + log_det_ratio +
                     log_psi - dn * dg.phi;
    out.log_k_pred = 0.5 * std::log(e2 / (t * t * t * dg.gamma)) + dn * dg.phi - log_psi;
    out.log_product_reference = log_rho_gin + log_det_ratio;
    return out;
}

} // namespace rmt
