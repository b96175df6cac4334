#pragma once

#include <vector>

#include "rmt/complex_matrix.hpp"

namespace rmt {

// Householder transformation R = I - 2 u u* exchanging a unit vector v with
// the first coordinate vector: R v = phase * e1, R (phase * e1) = v, with
// phase = e^{i arg v1}. R is Hermitian, unitary and an involution. For
// v1 real nonnegative the exchange is exact: R v = e1.
struct HouseholderReflector {
    std::size_t dim = 0;
    CVec u;       // empty when the reflector is the identity
    cx phase{1.0, 0.0};

    bool is_identity() const { return u.empty(); }
    ComplexMatrix dense() const;
    CVec apply(const CVec& x) const;                 // R x
    void apply_left(ComplexMatrix& a) const;         // A <- R A
    void apply_right(ComplexMatrix& a) const;        // A <- A R
};

HouseholderReflector householder_exchanging(const CVec& v);

struct SpectrumResult {
    CVec eigenvalues;
    bool converged = false;
    std::size_t iterations = 0;
    // ||A - Q T Q*||_F / ||A||_F when the Schur form was accumulated; 0.0 in
    // eigenvalue-only runs.
    double backward_error = 0.0;
};

struct SchurDecomposition {
    SpectrumResult spectrum;
    ComplexMatrix q;
    ComplexMatrix t;
};

// Eigenvalues via Hessenberg reduction followed by implicit single-shift
// (Wilkinson) QR with deflation. Throws ConvergenceError carrying the partial
// deflation state after 40 iterations per eigenvalue.
SpectrumResult eigenvalues_complex(const ComplexMatrix& a);

// Same iteration with the unitary accumulated; fills backward_error.
SchurDecomposition schur_complex(const ComplexMatrix& a);

struct EighResult {
    std::vector<double> eigenvalues; // nondecreasing
    ComplexMatrix vectors;           // columns; empty when not requested
};

// Hermitian eigensolver: Householder tridiagonalization + implicit-shift QL.
// Input must be Hermitian to 1e-12 relative (it is symmetrized internally).
EighResult eigh(const ComplexMatrix& h, bool want_vectors = true);

struct SvdResult {
    ComplexMatrix u;
    std::vector<double> singular_values; // nonincreasing
    ComplexMatrix v;                     // A = U diag(s) V*
};

// SVD of a square matrix through the Hermitian doubling [[0, A], [A*, 0]]:
// its nonnegative eigenvalues are the singular values and the eigenvector
// block components give U and V.
SvdResult svd_via_hermitisation(const ComplexMatrix& a);

struct LuFactorization {
    ComplexMatrix lu;
    std::vector<std::size_t> perm;
    int sign = 1;
    cx det() const;
    double log_abs_det() const;
};

// Partial-pivot LU; throws SingularMatrix when a pivot falls below
// 1e-14 * max|A|.
LuFactorization lu_factor(ComplexMatrix a);
ComplexMatrix lu_solve(const LuFactorization& f, const ComplexMatrix& b);

// (H - shift)^{-1} B by partial-pivot LU.
ComplexMatrix solve_shifted(const ComplexMatrix& h, cx shift, const ComplexMatrix& b);

cx det(const ComplexMatrix& a);
ComplexMatrix inverse(const ComplexMatrix& a);
double operator_norm(const ComplexMatrix& a); // largest singular value

} // namespace rmt
