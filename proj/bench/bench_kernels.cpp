// Timings for the parallel kernels against their serial references:
// blocked/OpenMP gemm vs the naive triple loop, and the sample-parallel
// ensemble loop vs a forced single-thread run. The parallel paths must agree
// with the references bit-for-bit where the reduction order is fixed.

#include <chrono>
#include <cstdio>

#include "rmt/gemm.hpp"
#include "rmt/linalg.hpp"
#include "rmt/resolvent.hpp"
#include "rmt/rng.hpp"
#include "rmt/universality.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace rmt;

namespace {

double seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ComplexMatrix random_matrix(std::size_t n, std::uint64_t seed) {
    Rng rng(seed, 0, streams::kMisc);
    ComplexMatrix a(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) a(i, j) = rng.gaussian();
    return a;
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (no OpenMP)\n");
#endif

    for (std::size_t n : {std::size_t(256), std::size_t(512)}) {
        const ComplexMatrix a = random_matrix(n, 1);
        const ComplexMatrix b = random_matrix(n, 2);
        auto t0 = std::chrono::steady_clock::now();
        const ComplexMatrix c1 = gemm(a, b);
        const double t_blocked = seconds(t0);
        t0 = std::chrono::steady_clock::now();
        const ComplexMatrix c2 = gemm_ref(a, b);
        const double t_ref = seconds(t0);
        const double diff = (c1 - c2).norm_max();
        const double flops = 8.0 * static_cast<double>(n) * n * n;
        std::printf("gemm      n=%4zu  blocked %8.3fs (%6.2f GF)  ref %8.3fs (%6.2f GF)  "
                    "speedup %5.2fx  max|diff| %.2e\n",
                    n, t_blocked, flops / t_blocked * 1e-9, t_ref, flops / t_ref * 1e-9,
                    t_ref / t_blocked, diff);
    }

    for (std::size_t n : {std::size_t(256), std::size_t(512)}) {
        const ComplexMatrix a = random_matrix(n, 3);
        auto t0 = std::chrono::steady_clock::now();
        const SpectrumResult s = eigenvalues_complex(a);
        std::printf("eig       n=%4zu  %8.3fs  (%zu QR iterations, converged=%d)\n", n,
                    seconds(t0), s.iterations, s.converged ? 1 : 0);
    }
    {
        const std::size_t n = 256;
        const ComplexMatrix a = random_matrix(n, 4);
        auto t0 = std::chrono::steady_clock::now();
        const HermitisationFactorization f = factorize(a, cx(0.3, 0.0));
        std::printf("factorize n=%4zu  %8.3fs  (s_min %.3e)\n", n, seconds(t0), f.s.back());
    }

    // ensemble loop: parallel run vs single-thread run must be identical
    {
        const std::size_t n = 64, samples = 32;
        const MatrixGenerator gen = MatrixGenerator::ginibre(n);
        auto t0 = std::chrono::steady_clock::now();
        const EnsembleRun par = sample_ensemble(gen, n, 0.5, samples, 42);
        const double t_par = seconds(t0);
#ifdef _OPENMP
        const int saved = omp_get_max_threads();
        omp_set_num_threads(1);
#endif
        t0 = std::chrono::steady_clock::now();
        const EnsembleRun ser = sample_ensemble(gen, n, 0.5, samples, 42);
        const double t_ser = seconds(t0);
#ifdef _OPENMP
        omp_set_num_threads(saved);
#endif
        bool identical = true;
        for (std::size_t s = 0; s < samples; ++s)
            if (par.spectra[s] != ser.spectra[s]) identical = false;
        std::printf("ensemble  n=%4zu x%zu  parallel %7.3fs  serial %7.3fs  speedup %5.2fx  "
                    "bit-identical %s\n",
                    n, samples, t_par, t_ser, t_ser / t_par, identical ? "yes" : "NO");
    }
    return 0;
}
