#include "rmt/complex_matrix.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "rmt/gemm.hpp"

namespace rmt {

ComplexMatrix ComplexMatrix::from_data(std::size_t rows, std::size_t cols, CVec data) {
    if (data.size() != rows * cols)
        throw InvalidInput("matrix data size mismatch: got " + std::to_string(data.size()) +
                           ", want " + std::to_string(rows * cols));
    ComplexMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.a_ = std::move(data);
    if (!m.all_finite()) throw InvalidInput("matrix contains non-finite entries");
    return m;
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(const CVec& d) {
    ComplexMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix m(cols_, rows_);
    for (std::size_t j = 0; j < cols_; ++j)
        for (std::size_t i = 0; i < rows_; ++i) m(j, i) = std::conj((*this)(i, j));
    return m;
}

ComplexMatrix ComplexMatrix::transpose() const {
    ComplexMatrix m(cols_, rows_);
    for (std::size_t j = 0; j < cols_; ++j)
        for (std::size_t i = 0; i < rows_; ++i) m(j, i) = (*this)(i, j);
    return m;
}

ComplexMatrix ComplexMatrix::conj() const {
    ComplexMatrix m(rows_, cols_);
    for (std::size_t k = 0; k < a_.size(); ++k) m.a_[k] = std::conj(a_[k]);
    return m;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& b) {
    if (rows_ != b.rows_ || cols_ != b.cols_) throw InvalidInput("matrix add: shape mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += b.a_[k];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& b) {
    if (rows_ != b.rows_ || cols_ != b.cols_) throw InvalidInput("matrix sub: shape mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= b.a_[k];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cx s) {
    for (auto& v : a_) v *= s;
    return *this;
}

void ComplexMatrix::shift_diagonal(cx s) {
    const std::size_t n = rows_ < cols_ ? rows_ : cols_;
    for (std::size_t i = 0; i < n; ++i) (*this)(i, i) -= s;
}

cx ComplexMatrix::trace() const {
    cx t = 0.0;
    const std::size_t n = rows_ < cols_ ? rows_ : cols_;
    for (std::size_t i = 0; i < n; ++i) t += (*this)(i, i);
    return t;
}

double ComplexMatrix::norm_fro() const {
    double s = 0.0;
    for (const auto& v : a_) s += std::norm(v);
    return std::sqrt(s);
}

double ComplexMatrix::norm_max() const {
    double s = 0.0;
    for (const auto& v : a_) s = std::max(s, std::abs(v));
    return s;
}

bool ComplexMatrix::all_finite() const {
    for (const auto& v : a_)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

ComplexMatrix ComplexMatrix::block(std::size_t i0, std::size_t j0, std::size_t h,
                                   std::size_t w) const {
    if (i0 + h > rows_ || j0 + w > cols_) throw InvalidInput("block out of range");
    ComplexMatrix m(h, w);
    for (std::size_t j = 0; j < w; ++j)
        for (std::size_t i = 0; i < h; ++i) m(i, j) = (*this)(i0 + i, j0 + j);
    return m;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    return gemm(a, b);
}

void write_cmat(std::ostream& os, const ComplexMatrix& a) {
    os << "CMAT " << a.rows() << " " << a.cols() << "\n";
    char buf[80];
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", a(i, j).real(), a(i, j).imag());
            os << buf;
        }
}

void write_cmat_file(const std::string& path, const ComplexMatrix& a) {
    std::ofstream f(path);
    if (!f) throw InvalidInput("cannot open for writing: " + path);
    write_cmat(f, a);
}

ComplexMatrix read_cmat(std::istream& is) {
    std::string tag;
    std::size_t rows = 0, cols = 0;
    if (!(is >> tag >> rows >> cols) || tag != "CMAT")
        throw InvalidInput("bad CMAT header");
    CVec data(rows * cols);
    for (std::size_t k = 0; k < rows * cols; ++k) {
        double re, im;
        if (!(is >> re >> im)) throw InvalidInput("truncated CMAT data");
        data[k] = cx(re, im);
    }
    return ComplexMatrix::from_data(rows, cols, std::move(data));
}

ComplexMatrix read_cmat_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidInput("cannot open: " + path);
    return read_cmat(f);
}

double vec_norm(const CVec& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

cx vec_dot(const CVec& x, const CVec& y) {
    cx s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
    return s;
}

void vec_scale(CVec& v, cx s) {
    for (auto& x : v) x *= s;
}

CVec mat_vec(const ComplexMatrix& a, const CVec& x) {
    CVec y(a.rows(), cx(0.0));
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const cx xj = x[j];
        const cx* c = a.col(j);
        for (std::size_t i = 0; i < a.rows(); ++i) y[i] += c[i] * xj;
    }
    return y;
}

CVec adj_vec(const ComplexMatrix& a, const CVec& x) {
    CVec y(a.cols(), cx(0.0));
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const cx* c = a.col(j);
        cx s = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) s += std::conj(c[i]) * x[i];
        y[j] = s;
    }
    return y;
}

} // namespace rmt
