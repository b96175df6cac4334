#include "rmt/gemm.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rmt {

namespace {

constexpr std::size_t kBlock = 64;

ComplexMatrix materialize(const ComplexMatrix& a, Op op) {
    return op == Op::None ? a : a.adjoint();
}

} // namespace

ComplexMatrix gemm(const ComplexMatrix& a_in, const ComplexMatrix& b_in, Op opa, Op opb) {
    // Adjoint operands are materialized once; all hot loops then run on
    // contiguous column-major panels.
    const ComplexMatrix a = materialize(a_in, opa);
    const ComplexMatrix b = materialize(b_in, opb);
    if (a.cols() != b.rows()) throw InvalidInput("gemm: inner dimension mismatch");

    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    ComplexMatrix c(m, n);
    cx* __restrict cd = c.data();
    const cx* __restrict ad = a.data();
    const cx* __restrict bd = b.data();

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) if (m * n * k > 1u << 16)
#endif
    for (std::size_t jj = 0; jj < n; jj += kBlock) {
        const std::size_t jend = jj + kBlock < n ? jj + kBlock : n;
        for (std::size_t kk = 0; kk < k; kk += kBlock) {
            const std::size_t kend = kk + kBlock < k ? kk + kBlock : k;
            for (std::size_t j = jj; j < jend; ++j) {
                cx* cj = cd + m * j;
                for (std::size_t l = kk; l < kend; ++l) {
                    const cx blj = bd[l + k * j];
                    if (blj == cx(0.0)) continue;
                    const cx* al = ad + m * l;
                    for (std::size_t i = 0; i < m; ++i) cj[i] += al[i] * blj;
                }
            }
        }
    }
    return c;
}

ComplexMatrix gemm_ref(const ComplexMatrix& a_in, const ComplexMatrix& b_in, Op opa, Op opb) {
    const ComplexMatrix a = materialize(a_in, opa);
    const ComplexMatrix b = materialize(b_in, opb);
    if (a.cols() != b.rows()) throw InvalidInput("gemm_ref: inner dimension mismatch");

    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    ComplexMatrix c(m, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i) {
            cx s = 0.0;
            for (std::size_t l = 0; l < k; ++l) s += a(i, l) * b(l, j);
            c(i, j) = s;
        }
    return c;
}

} // namespace rmt
