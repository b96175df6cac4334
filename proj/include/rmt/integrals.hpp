#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rmt/complex_matrix.hpp"
#include "rmt/resolvent.hpp"

namespace rmt {

// Sphere-integral reduction: int_{S^{2N-1}} f dS = int_R e^{ix} fhat(x) dx
// for fhat(x) = (1/pi) int_{C^N} e^{-i x |u|^2} f(u) du and dS the
// unnormalized surface measure. The oscillatory line integral is truncated
// where the decay bound |fhat| <= decay_const / |x|^decay_order allows, with
// an integration-by-parts tail correction.
double sphere_integral_reduce(const std::function<cx(double)>& f_hat, double decay_order,
                              double decay_const, double tol = 1e-10);

// fhat for f(u) = exp(-u* B u) with B Hermitian PSD (eigenvalues given):
// fhat(x) = pi^{N-1} prod_i (b_i + i x)^{-1}. When some b_i vanish the
// internal regularization f -> e^{a - a|u|^2} f with a = 2 is applied.
std::function<cx(double)> gaussian_quadratic_fhat(std::vector<double> b_eigs);

// Direct Monte-Carlo of int_{S^{2N-1}} f dS for cross-checks.
struct SphereMc {
    double mean = 0.0;   // integral estimate (includes the surface volume)
    double stderr_ = 0.0;
};
SphereMc sphere_integral_mc(std::size_t complex_dim, const std::function<double(const CVec&)>& f,
                            std::size_t samples, std::uint64_t seed);

double sphere_surface_volume(std::size_t complex_dim); // 2 pi^m / (m-1)!

// Normalizer of the tilted sphere measure:
// K~ = (1/t) sqrt(N/(2 pi t)) e^{N eta^2/t} det^{-1}(eta^2 + |A-w|^2)
//      int e^{i N p / t} prod_i (1 + i p / (eta^2 + s_i^2))^{-1} dp.
// The value is eta-independent; eta only selects the representation.
struct KContourResult {
    double log_value = 0.0;
    double value = 0.0;          // exp(log_value) when representable
    double imag_leak = 0.0;      // |Im| / |Re| of the p-integral
    double quad_error = 0.0;
    double p_max = 0.0;
};
KContourResult k_contour_formula(const ComplexMatrix& a_proj, cx w, double eta, double t,
                                 std::size_t ambient_n = 0);

// Direct sphere Monte-Carlo of the same normalizer:
// b_{N,j} Vol(S) mean_v exp(-(N/t) ||(A-w) v||^2), with N-j+1 = dim(A_proj).
struct KSphereMcResult {
    double value = 0.0;
    double stderr_ = 0.0;
    double log_value = 0.0;
};
KSphereMcResult k_tilde_sphere_mc(const ComplexMatrix& a_proj, cx w, double t,
                                  std::size_t samples, std::uint64_t seed,
                                  std::size_t ambient_n = 0);

enum class NuStatistic { AlphaForm, BetaForm, GammaForm, DetForm };

// Importance-sampled expectation under the tilted sphere measure
// d nu ~ exp(-(N/t) ||(A-w) v||^2) dS(v): uniform draws reweighted, with the
// effective sample size guarding reliability.
struct NuExpectation {
    cx mean{0.0, 0.0};
    double stderr_ = 0.0;
    double ess = 0.0;
    bool low_ess_warning = false;
    cx target{0.0, 0.0}; // trace-formula prediction for the statistic
};
NuExpectation nu_expectation(const ComplexMatrix& a_proj, cx w, double eta, double t,
                             NuStatistic stat, std::size_t samples, std::uint64_t seed,
                             std::size_t ambient_n = 0);

// k = 1 duality: E|det(A + B - z)|^2 with B iid complex Gaussian entries of
// variance v equals (1/(pi v)) int_C e^{-|x|^2/v} det(|x|^2 + |A - z|^2) dx.
// Default variance is t / dim(A); pass ambient_n to use t / ambient_n.
struct DualityResult {
    double gaussian_mc = 0.0;
    double mc_stderr = 0.0;
    double dual_integral = 0.0;
    double log_gaussian_mc = 0.0;
    double log_dual_integral = 0.0;
    double variance = 0.0; // entry variance used on both sides
};
DualityResult char_poly_duality_k1(const ComplexMatrix& a_proj, cx z_eval, double t,
                                   std::size_t samples, std::uint64_t seed,
                                   std::size_t ambient_n = 0);

// Leading-order predictors for the rescaled characteristic-polynomial factor
// and the sphere normalizer at one offset point (k = 1), in log space; the
// exp(+-N phi) and psi factors cancel in the product F~ K~.
struct PredictorResult {
    double eta_star = 0.0;
    double sigma_star = 0.0;
    double gamma_star = 0.0;
    double phi = 0.0;
    double psi = 0.0;           // psi_1 at the offset
    double det_factor = 0.0;    // |det V* G V| at eta_star for the supplied v
    double log_f_pred = 0.0;
    double log_k_pred = 0.0;
    double log_product_reference = 0.0; // log[rho_Gin * eta^2 det_factor/(t^2 gamma sigma)]
};
PredictorResult asymptotic_predictors_k1(const ComplexMatrix& a, cx z, double t, cx z_offset,
                                         const CVec& v1);

} // namespace rmt
