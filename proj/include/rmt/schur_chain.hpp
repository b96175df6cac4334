#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmt/complex_matrix.hpp"
#include "rmt/linalg.hpp"

namespace rmt {

// Variables of the partial Schur decomposition: k eigenvalue slots, the
// exchange directions v_i (dimension N-i+1, first coordinate real
// nonnegative), the coupling rows w_i (dimension N-i) and the trailing
// matrix of dimension N-k.
struct SchurChain {
    std::size_t n = 0;
    std::size_t k = 0;
    CVec z_list;
    std::vector<CVec> v_list;
    std::vector<CVec> w_list;
    ComplexMatrix m_k;

    void validate() const;
    std::string to_json() const;
    static SchurChain from_json(const std::string& text);
};

// One decomposition step: R(v) [[z, w*], [0, M]] R(v).
ComplexMatrix schur_step_forward(cx z, const CVec& v, const CVec& w, const ComplexMatrix& m);

struct SchurStepInverse {
    cx z{0.0, 0.0};
    CVec v;
    CVec w;
    ComplexMatrix m_small;
};

// Inverts one step for the eigenvalue selected by index into the spectrum
// sorted by (Re, Im). Requires pairwise eigenvalue gaps > 1e-8.
SchurStepInverse schur_step_inverse(const ComplexMatrix& m_big, std::size_t eigen_index);

// Applies the k forward steps innermost-first.
ComplexMatrix assemble(const SchurChain& chain);

// |Vandermonde(z)|^2 prod_i |det(z_i - M_k)|^2.
double jacobian(const SchurChain& chain);

// Central-difference Jacobian determinant of the chart map around the
// chain's base point. Sphere coordinates use the phase-orthogonal chart
// (directions orthogonal to both v and iv), matching the quotient measure
// the closed form refers to. 2 N^2 real coordinates in total.
double jacobian_fd(const SchurChain& chain, double step = 1e-6);

// Projections of a fixed matrix onto the shrinking subspaces defined by the
// exchange directions, with the coupling scalars/vectors of each level.
struct ProjectedMatrixChain {
    std::vector<ComplexMatrix> a_list; // A^(0) .. A^(k)
    CVec a_scalars;                    // a_i = v_i* A^(i-1) v_i
    std::vector<CVec> b_list;          // rows of the adjoint coupling
    std::vector<CVec> c_list;          // columns below the diagonal
};
ProjectedMatrixChain project_chain(const ComplexMatrix& a, const std::vector<CVec>& v_list);

// Paired Monte-Carlo estimators of the k-point correlation function of
// A + sqrt(t) Ginibre at the evaluation points: eigenvalue histogramming
// against the change-of-variables integral (spheres sampled uniformly,
// Gaussian w-integrals done analytically, trailing matrix sampled from its
// Gaussian weight).
struct KPointComparison {
    double lhs_estimate = 0.0, lhs_stderr = 0.0;
    double rhs_estimate = 0.0, rhs_stderr = 0.0;
    bool inconclusive = false;
    std::size_t lhs_counts = 0;
};

KPointComparison kpoint_identity_mc(std::size_t n, std::size_t k, double t,
                                    const ComplexMatrix& a, const std::vector<cx>& z_eval,
                                    std::size_t samples, std::uint64_t seed,
                                    double bin_radius = 0.25);

} // namespace rmt
