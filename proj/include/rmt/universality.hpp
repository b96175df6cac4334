#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rmt/complex_matrix.hpp"
#include "rmt/generator.hpp"
#include "rmt/resolvent.hpp"

namespace rmt {

struct FixedPointResult {
    double eta_star = 0.0;
    double bracket_lo = 0.0, bracket_hi = 0.0;
    std::size_t iterations = 0;
    double residual = 0.0; // |t <H(eta*)> - 1|
    double sigma_star = 0.0;
};

// Unique positive solution of t <H_z(eta)> = 1: bisection on the strictly
// decreasing trace, then Newton polish. Throws NoSolution when the trace
// stays below 1/t for every eta.
FixedPointResult solve_eta_star(const HermitisationFactorization& f, double t);

struct EnsembleRun {
    std::string generator_id;
    std::size_t n = 0;
    double t = 0.0;
    std::uint64_t master_seed = 0;
    bool redraw_a = false;
    std::size_t sample_count = 0;
    std::vector<CVec> spectra;          // per sample, sorted by (Re, Im)
    std::vector<std::uint8_t> failed;   // eigensolver failures, run continues
    double wall_seconds = 0.0;
    std::string code_version;

    void write_eigenvalues_csv(std::ostream& os) const;
};

// Spectra of A + sqrt(t) B with B complex Ginibre (variance 1/N). A is drawn
// once from the generator unless redraw_a is set; pass fixed_a to override.
EnsembleRun sample_ensemble(const MatrixGenerator& gen, std::size_t n, double t,
                            std::size_t samples, std::uint64_t master_seed,
                            bool redraw_a = false, const ComplexMatrix* fixed_a = nullptr);

struct CorrelationBin {
    double lo = 0.0, hi = 0.0;
    double estimate = 0.0;
    double stderr_ = 0.0;
    double reference = 0.0;
    double z_score = 0.0;
    std::size_t pair_count = 0;
};

struct CorrelationEstimate {
    int k = 1;
    cx z{0.0, 0.0};
    double rescale = 0.0; // sqrt(N sigma*)
    double window_radius = 0.0;
    std::size_t samples_used = 0;
    std::size_t points_in_window = 0;
    // k = 1: area-normalized density of rescaled points (limit 1/pi)
    double density_estimate = 0.0;
    double density_stderr = 0.0;
    double density_reference = 0.0;
    // k = 2: radial pair correlation against 1 - exp(-r^2)
    std::vector<CorrelationBin> bins;

    void write_csv(std::ostream& os) const;
};

// Rescales eigenvalues by sqrt(N sigma*) around z and estimates the k-point
// statistic inside the window. k = 2 uses the ratio estimator
// g(r) = rho2/rho1^2 in annular bins with window-intersection area
// correction; errors by per-sample jackknife.
CorrelationEstimate estimate_correlation(const EnsembleRun& run, int k, cx z, double sigma_star,
                                         double window_radius, std::size_t bins);

struct GinibreKernelEval {
    std::vector<cx> points;
    ComplexMatrix kernel;
    double determinant = 0.0;
};

// k-point bulk kernel determinant det[(1/pi) exp(-(|zj|^2+|zl|^2)/2 + conj(zj) zl)].
GinibreKernelEval ginibre_kernel(const std::vector<cx>& points);

struct ExperimentConfig {
    std::string generator = "ginibre"; // ginibre | bernoulli | zero | file
    std::string matrix_file;
    std::size_t n = 1024;
    double t = 0.4;
    cx z{0.0, 0.0};
    double window_radius = 6.0;
    std::size_t bins = 40;
    std::size_t samples = 200;
    std::uint64_t seed = 0x5EED;
    bool redraw_a = false;
    double band_r_lo = 0.2, band_r_hi = 4.0;
    double chi2_p_min = 0.01;
    std::size_t audit_eta_points = 4;
};

struct ExperimentReport {
    ExperimentConfig config;
    bool hypothesis_ok = true; // t >= N^{-1/3}
    std::string hypothesis_note;
    AssumptionReport audit;
    bool audit_pass = true;
    bool fixed_point_ok = true;
    std::string error_note;
    FixedPointResult fixed_point;
    EnsembleRun run;
    CorrelationEstimate k1, k2;
    double chi2 = 0.0, chi2_p = 1.0;
    std::size_t band_bins = 0, band_failures = 0;
    bool k1_pass = false, k2_pass = false, pass = false;

    std::string json_report() const;
};

// End to end: audit A1 on the A sample, solve the fixed point, sample the
// ensemble, estimate k = 1 and k = 2 correlations, compare against the
// kernel references.
ExperimentReport universality_experiment(const ExperimentConfig& cfg);

} // namespace rmt
