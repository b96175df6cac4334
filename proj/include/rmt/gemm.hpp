#pragma once

#include "rmt/complex_matrix.hpp"

namespace rmt {

enum class Op { None, Adjoint };

// Blocked column-major multiply, OpenMP-parallel over column panels.
// C = op(A) * op(B). Block size 64 keeps panels L1/L2 resident.
ComplexMatrix gemm(const ComplexMatrix& a, const ComplexMatrix& b,
                   Op opa = Op::None, Op opb = Op::None);

// Naive triple loop kept as the serial reference for tests and benchmarks.
ComplexMatrix gemm_ref(const ComplexMatrix& a, const ComplexMatrix& b,
                       Op opa = Op::None, Op opb = Op::None);

} // namespace rmt
