#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rmt/complex_matrix.hpp"
#include "rmt/linalg.hpp"

namespace rmt {

// 2N x 2N Hermitian doubling [[0, A-z], [A*-conj(z), 0]].
ComplexMatrix hermitise(const ComplexMatrix& a, cx z);

// SVD of A - z with W = V*U cached. One factorization serves every eta:
// diagonal traces are O(N) per eta and W-dependent traces O(N^2) per eta.
struct HermitisationFactorization {
    cx z{0.0, 0.0};
    std::size_t n = 0;
    std::vector<double> s; // singular values of A - z, nonincreasing
    ComplexMatrix u, v;    // A - z = U diag(s) V*
    ComplexMatrix w;       // V*U
    CVec w_diag;

    // <H_z(eta)> = (1/N) sum 1/(eta^2 + s_i^2); strictly decreasing in eta
    double h_trace(double eta) const;
    double h2_trace(double eta) const; // <H^2>
    // log|det(Hermitisation - i eta)| = sum_i log(eta^2 + s_i^2)
    double logdet_shifted(double eta) const;
    double logdet() const; // log|det Hermitisation| = sum_i log s_i^2
};

HermitisationFactorization factorize(const ComplexMatrix& a, cx z);

// The trace family at one (A, z, eta, t). Conventions follow <X> = tr(X)/N
// even for doubled matrices.
struct ResolventDiagnostics {
    double eta = 0.0, t = 0.0;
    double g = 0.0;     // eta <H>
    double alpha = 0.0; // eta^2 <H Ht>
    cx beta{0.0, 0.0};  // eta <H^2 (A-z)>
    double gamma = 0.0; // eta^2 <H^2>
    double sigma = 0.0; // alpha + |beta|^2 / gamma
    cx delta{0.0, 0.0}; // <(H (A-z))^2>
    cx tau{0.0, 0.0};   // (beta^2 + gamma delta) / (gamma sigma)
    double phi = 0.0;   // eta^2/t - (1/N) log|det(Herm - i eta)|
};

ResolventDiagnostics diagnostics(const HermitisationFactorization& f, double eta, double t);

// Single-resolvent traces used by the local-law residual measurements.
struct SingleTraces {
    cx g_full;  // <G>
    cx g_e;     // <G E>
    cx g_estar; // <G E*>
};
SingleTraces single_traces(const HermitisationFactorization& f, double eta);

// max |<G B1 G B2>| and max |<G B1 G B2 G B3>| over B_i in {E, E*}, all
// resolvents at the same eta.
struct MultiResolventTraces {
    double a2_max = 0.0;
    double a3_max = 0.0;
    // the specific two-resolvent traces, also used as oracles
    cx ge_ge, ge_gestar, gestar_gestar;
};
MultiResolventTraces multi_resolvent_traces(const HermitisationFactorization& f, double eta);

struct AuditThresholds {
    double c_lo = 0.05;
    double c_hi = 20.0;
};

struct AuditCell {
    cx z{0.0, 0.0};
    double eta = 0.0;
    double g = 0.0, alpha = 0.0, abs_beta = 0.0, eta_gamma = 0.0;
    double a2_max = 0.0, a3_max_scaled = 0.0;
    bool pass = false;
    bool skipped = false;
    std::string reason;
};

struct AssumptionReport {
    AuditThresholds thresholds;
    std::size_t n = 0;
    double eta_min = 0.0;
    bool eta_below_recommended = false; // eta_min < N^{-1/2}
    std::vector<AuditCell> cells;

    bool all_pass() const;
    double pass_fraction() const;
    void write_csv(std::ostream& os) const;
    std::string json_summary() const;
};

// Tabulates the A1 trace family and the A2/A3 multi-resolvent traces over a
// (z, eta) grid. Cells never throw; failures are recorded in place.
AssumptionReport audit_assumptions(const ComplexMatrix& a, const std::vector<cx>& z_grid,
                                   const std::vector<double>& eta_grid,
                                   AuditThresholds thresholds = {});

// Convenience eta grid: log-spaced [eta_min, eta_max], descending count points.
std::vector<double> log_eta_grid(double eta_min, double eta_max, std::size_t count);

// |log det H_z - (log|det(H_z - iT)| - Im int_0^T tr G dEta)| with the
// integral done by adaptive quadrature on the factorized spectrum.
double logdet_identity_check(const ComplexMatrix& a, cx z, double t_cut);

// Same residual with the integral replaced by the exact per-singular-value
// antiderivative sum; test oracle for the quadrature path.
double logdet_identity_residual_closed_form(const HermitisationFactorization& f, double t_cut);

struct GirkoResult {
    double lhs = 0.0; // sum f(eigenvalues)
    double rhs = 0.0; // (1/4pi) int Laplacian(f) log|det Herm_z|
    double residual = 0.0;
    bool boundary_warning = false; // spectrum within 2 cells of the grid edge
};

// Spectrum-vs-log-determinant identity on a uniform grid over
// [center +- half_width]^2 with a 5-point discrete Laplacian of f.
GirkoResult girko_check(const ComplexMatrix& a, const std::function<double(cx)>& f, cx center,
                        double half_width, std::size_t grid_n);

struct MinorResolventResult {
    double identity_residual = 0.0; // max-norm difference of the two sides
    double correction_norm = 0.0;   // ||A^{-1}U (U*A^{-1}U)^{-1} U*A^{-1}||
    double bound = 0.0;             // ||(Re A)^{-1}|| (or Im-variant)
    bool norm_bound_applicable = false;
    bool norm_bound_holds = false;
};

// Verifies the minor-resolvent identity for an orthonormal N x k frame and,
// when Re A > 0 or Im A > 0, the norm bound on the correction term.
MinorResolventResult minor_resolvent_check(const ComplexMatrix& a, const ComplexMatrix& u_k);

} // namespace rmt
