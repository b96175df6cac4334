#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "rmt/errors.hpp"

namespace rmt {

using cx = std::complex<double>;
using CVec = std::vector<cx>;

// Dense complex matrix, column-major. The workhorse container for the whole
// library; kernels index the flat storage directly.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(rows * cols, cx(0.0, 0.0)) {}

    // Validates that every entry is finite.
    static ComplexMatrix from_data(std::size_t rows, std::size_t cols, CVec data);
    static ComplexMatrix identity(std::size_t n);
    static ComplexMatrix diagonal(const CVec& d);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    cx& operator()(std::size_t i, std::size_t j) { return a_[i + rows_ * j]; }
    const cx& operator()(std::size_t i, std::size_t j) const { return a_[i + rows_ * j]; }

    cx* data() { return a_.data(); }
    const cx* data() const { return a_.data(); }
    cx* col(std::size_t j) { return a_.data() + rows_ * j; }
    const cx* col(std::size_t j) const { return a_.data() + rows_ * j; }

    ComplexMatrix adjoint() const;
    ComplexMatrix transpose() const;
    ComplexMatrix conj() const;

    ComplexMatrix& operator+=(const ComplexMatrix& b);
    ComplexMatrix& operator-=(const ComplexMatrix& b);
    ComplexMatrix& operator*=(cx s);

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
    friend ComplexMatrix operator*(ComplexMatrix a, cx s) { return a *= s; }
    friend ComplexMatrix operator*(cx s, ComplexMatrix a) { return a *= s; }

    // Subtracts s from the diagonal (A - s*I), in place variant of the shift.
    void shift_diagonal(cx s);

    cx trace() const;
    double norm_fro() const;
    double norm_max() const;
    bool all_finite() const;

    // Leading principal or trailing submatrix copies.
    ComplexMatrix block(std::size_t i0, std::size_t j0, std::size_t h, std::size_t w) const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    CVec a_;
};

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

// Matrix text format: header "CMAT <rows> <cols>" then rows*cols lines of
// "re im" in column-major order; round-trips at 17 significant digits.
void write_cmat(std::ostream& os, const ComplexMatrix& a);
void write_cmat_file(const std::string& path, const ComplexMatrix& a);
ComplexMatrix read_cmat(std::istream& is);
ComplexMatrix read_cmat_file(const std::string& path);

// Small vector helpers shared across modules.
double vec_norm(const CVec& v);
cx vec_dot(const CVec& x, const CVec& y); // conj(x) . y
void vec_scale(CVec& v, cx s);
CVec mat_vec(const ComplexMatrix& a, const CVec& x);
CVec adj_vec(const ComplexMatrix& a, const CVec& x); // A* x

} // namespace rmt
