#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rmt/complex_matrix.hpp"
#include "rmt/generator.hpp"
#include "rmt/resolvent.hpp"

namespace rmt {

// Solution of -1/m = i eta + m - |z|^2/(i eta + m) with Im m > 0.
struct SelfConsistentSolution {
    cx z{0.0, 0.0};
    double eta = 0.0;
    cx m{0.0, 0.0};
    cx u{0.0, 0.0}; // m / (i eta + m)
    double residual = 0.0;
};

// Roots enumerated via the companion matrix of the cubic
// m^3 + 2 i eta m^2 + (1 - eta^2 - |z|^2) m + i eta = 0; the admissible root
// has Im m > 0 (min residual on numerically ambiguous input), then a final
// Newton polish.
SelfConsistentSolution solve_cubic_m(cx z, double eta);

// [[m, -z u], [-conj(z) u, m]] as a dense 2x2.
ComplexMatrix m1_matrix(const SelfConsistentSolution& sol);

// 2x2 block matrix with scalar blocks [[a, b], [c, d]]; the invariant
// subspace of the stability operator. Maps to the vector (a d b c).
struct BlockScalar {
    cx a{0.0, 0.0}, b{0.0, 0.0}, c{0.0, 0.0}, d{0.0, 0.0};

    static BlockScalar one() { return {1.0, 0.0, 0.0, 1.0}; }
    static BlockScalar e() { return {0.0, 1.0, 0.0, 0.0}; }
    static BlockScalar estar() { return {0.0, 0.0, 1.0, 0.0}; }

    cx avg_trace() const { return a + d; }      // <X 1> with <.> = tr/N
    cx trace_with_e() const { return c; }       // <X E>
    cx trace_with_estar() const { return b; }   // <X E*>
};

BlockScalar block_mul(const BlockScalar& x, const BlockScalar& y);

struct StabilityOperator {
    double eta1 = 0.0, eta2 = 0.0;
    SelfConsistentSolution sol1, sol2;
    ComplexMatrix t1;            // 2x2
    ComplexMatrix t2;            // 2x2
    ComplexMatrix b_4x4;         // [[T1, 0], [T2, I]] on (a d b c)
    ComplexMatrix b_inverse_4x4; // [[T1^{-1}, 0], [-T2 T1^{-1}, I]]
};

// Throws NoSolution near criticality (||T1^{-1}|| > 1e14).
StabilityOperator stability_operator(cx z, double eta1, double eta2);

// Deterministic two-resolvent approximation restricted to the scalar-block
// subspace: M2(eta1, eta2; B) = B_z^{-1}[ M1(eta1) B M1(eta2) ].
BlockScalar m2_prediction(cx z, double eta1, double eta2, const BlockScalar& b);

// Applies the stability operator itself (for oracle cross-checks):
// B_z[X] = X - M1(eta1) S[X] M1(eta2), with S[[X,Y],[W,Z]] = [[<Z>,0],[0,<X>]].
BlockScalar stability_apply(cx z, double eta1, double eta2, const BlockScalar& x);

// Deterministic predictions of the trace family from M1/M2.
struct PredictedDiagnostics {
    double g = 0.0;
    double alpha = 0.0;
    cx beta{0.0, 0.0};
    double gamma = 0.0;
    double sigma = 0.0;
    double sigma_alt = 0.0; // alpha^2 + |beta|^2/gamma^2 variant, debug only
    double max_imag_leak = 0.0;
};
PredictedDiagnostics predicted_diagnostics(cx z, double eta);

struct LocalLawCell {
    cx z{0.0, 0.0};
    double eta = 0.0;
    double median_single_i = 0.0, max_single_i = 0.0;
    double median_single_e = 0.0, max_single_e = 0.0;
    double median_single_estar = 0.0, max_single_estar = 0.0;
    double median_double = 0.0, max_double = 0.0;
    double envelope_single = 0.0; // N^0.1 / (N eta)
    double envelope_double = 0.0; // N^0.1 / (N eta^2)
};

struct LocalLawReport {
    std::size_t n = 0;
    std::size_t samples = 0;
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> sample_seeds;
    std::size_t failed_samples = 0;
    std::vector<LocalLawCell> cells;

    void write_csv(std::ostream& os) const;
};

// Residuals |<(G - M1) B>| (B in {1, E, E*}) and |<(G E G - M2(E)) E*>|
// against sampled matrices, per grid cell, with median and max over samples.
LocalLawReport measure_local_law(const MatrixGenerator& gen, std::size_t n,
                                 const std::vector<cx>& z_grid,
                                 const std::vector<double>& eta_grid, std::size_t samples,
                                 std::uint64_t seed);

} // namespace rmt
