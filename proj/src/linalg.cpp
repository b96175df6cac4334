#include "rmt/linalg.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>

#include "rmt/gemm.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rmt {

namespace {

constexpr double kDeflationEps = 1e-14; // relative subdiagonal deflation
constexpr int kMaxIterPerEig = 40;

cx unit_phase(cx z) {
    const double a = std::abs(z);
    return a > 0.0 ? z / a : cx(1.0, 0.0);
}

// Unitary 2x2 [[alpha, beta], [-conj(beta), conj(alpha)]] with
// |alpha|^2 + |beta|^2 = 1. zero_second() maps (x, y) to (r, 0).
struct Rot {
    cx alpha{1.0, 0.0};
    cx beta{0.0, 0.0};

    static Rot zero_second(cx x, cx y) {
        const double rho = std::sqrt(std::norm(x) + std::norm(y));
        if (rho == 0.0) return {};
        return {std::conj(x) / rho, std::conj(y) / rho};
    }
};

inline void rot_rows(ComplexMatrix& h, std::size_t i, std::size_t j0, std::size_t j1,
                     const Rot& g) {
    const std::size_t n = h.rows();
    cx* d = h.data();
    for (std::size_t j = j0; j <= j1; ++j) {
        cx& x = d[i + n * j];
        cx& y = d[i + 1 + n * j];
        const cx xf = x, yf = y;
        x = g.alpha * xf + g.beta * yf;
        y = -std::conj(g.beta) * xf + std::conj(g.alpha) * yf;
    }
}

// Right-multiplication by G*: mixes columns i, i+1 over rows [r0, r1].
inline void rot_cols(ComplexMatrix& h, std::size_t i, std::size_t r0, std::size_t r1,
                     const Rot& g) {
    cx* ci = h.col(i);
    cx* cj = h.col(i + 1);
    for (std::size_t r = r0; r <= r1; ++r) {
        const cx x = ci[r], y = cj[r];
        ci[r] = x * std::conj(g.alpha) + y * std::conj(g.beta);
        cj[r] = -x * g.beta + y * g.alpha;
    }
}

void hessenberg_reduce(ComplexMatrix& h, ComplexMatrix* q) {
    const std::size_t n = h.rows();
    if (q) *q = ComplexMatrix::identity(n);
    if (n < 3) return;

    CVec u(n), w(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        const std::size_t m = n - k - 1; // length of the column below the diagonal
        cx* colk = h.col(k);
        double xnorm2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) xnorm2 += std::norm(colk[k + 1 + i]);
        const double xnorm = std::sqrt(xnorm2);
        if (xnorm == 0.0) continue;

        const cx alpha = -unit_phase(colk[k + 1]) * xnorm;
        double un2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            u[i] = colk[k + 1 + i];
            if (i == 0) u[i] -= alpha;
            un2 += std::norm(u[i]);
        }
        const double un = std::sqrt(un2);
        if (un < xnorm * 1e-300) continue;
        for (std::size_t i = 0; i < m; ++i) u[i] /= un;

        // left: rows k+1..n-1 of columns k+1..n-1
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (m > 128)
#endif
        for (std::size_t j = k + 1; j < n; ++j) {
            cx* c = h.col(j) + k + 1;
            cx s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += std::conj(u[i]) * c[i];
            s *= 2.0;
            for (std::size_t i = 0; i < m; ++i) c[i] -= s * u[i];
        }

        // right: columns k+1..n-1, all rows
        std::fill(w.begin(), w.end(), cx(0.0));
#ifdef _OPENMP
#pragma omp parallel if (m > 128)
        {
            const int nt = omp_get_num_threads();
            const int tid = omp_get_thread_num();
            const std::size_t lo = n * tid / nt, hi = n * (tid + 1) / nt;
            for (std::size_t j = 0; j < m; ++j) {
                const cx uj = u[j];
                const cx* c = h.col(k + 1 + j);
                for (std::size_t i = lo; i < hi; ++i) w[i] += c[i] * uj;
            }
#pragma omp barrier
            for (std::size_t j = 0; j < m; ++j) {
                const cx s = 2.0 * std::conj(u[j]);
                cx* c = h.col(k + 1 + j);
                for (std::size_t i = lo; i < hi; ++i) c[i] -= s * w[i];
            }
        }
#else
        for (std::size_t j = 0; j < m; ++j) {
            const cx uj = u[j];
            const cx* c = h.col(k + 1 + j);
            for (std::size_t i = 0; i < n; ++i) w[i] += c[i] * uj;
        }
        for (std::size_t j = 0; j < m; ++j) {
            const cx s = 2.0 * std::conj(u[j]);
            cx* c = h.col(k + 1 + j);
            for (std::size_t i = 0; i < n; ++i) c[i] -= s * w[i];
        }
#endif

        if (q) {
            ComplexMatrix& qq = *q;
            for (std::size_t j = 0; j < m; ++j) {
                const cx uj = u[j];
                const cx* c = qq.col(k + 1 + j);
                if (j == 0) std::fill(w.begin(), w.end(), cx(0.0));
                for (std::size_t i = 0; i < n; ++i) w[i] += c[i] * uj;
            }
            for (std::size_t j = 0; j < m; ++j) {
                const cx s = 2.0 * std::conj(u[j]);
                cx* c = qq.col(k + 1 + j);
                for (std::size_t i = 0; i < n; ++i) c[i] -= s * w[i];
            }
        }

        colk[k + 1] = alpha;
        for (std::size_t i = k + 2; i < n; ++i) colk[i] = 0.0;
    }
}

std::pair<cx, cx> eig2x2(cx a, cx b, cx c, cx d) {
    const cx half_tr = 0.5 * (a + d);
    const cx disc = std::sqrt(0.25 * (a - d) * (a - d) + b * c);
    return {half_tr + disc, half_tr - disc};
}

cx wilkinson_shift(const ComplexMatrix& h, std::size_t hi) {
    const cx a = h(hi - 1, hi - 1), b = h(hi - 1, hi), c = h(hi, hi - 1), d = h(hi, hi);
    auto [l1, l2] = eig2x2(a, b, c, d);
    return std::abs(l1 - d) < std::abs(l2 - d) ? l1 : l2;
}

// Implicit single-shift QR with deflation. q and full_t select Schur
// accumulation; in eigenvalue-only mode the updates stay inside the active
// block. Row updates beyond a 4-column window are batched per sweep so the
// column-major storage is walked contiguously.
SpectrumResult hessenberg_qr(ComplexMatrix& h, ComplexMatrix* q, bool full_t) {
    const std::size_t n = h.rows();
    SpectrumResult res;
    res.eigenvalues.assign(n, cx(0.0));
    if (n == 0) {
        res.converged = true;
        return res;
    }

    const double scale = std::max(h.norm_max(), DBL_MIN);
    std::vector<Rot> rots(n);

    std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n) - 1;
    int iter_this = 0;

    auto fail = [&](std::ptrdiff_t deflated_from) {
        CVec partial(res.eigenvalues.begin() + deflated_from + 1, res.eigenvalues.end());
        throw ConvergenceError("QR iteration failed to converge after " +
                                   std::to_string(kMaxIterPerEig) + " iterations per eigenvalue",
                               std::move(partial));
    };

    while (hi >= 0) {
        if (hi == 0) {
            res.eigenvalues[0] = h(0, 0);
            break;
        }
        // deflation scan from the bottom of the active block
        std::ptrdiff_t lo = hi;
        while (lo > 0) {
            const double sub = std::abs(h(lo, lo - 1));
            double ref = std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo));
            if (ref == 0.0) ref = scale;
            if (sub <= kDeflationEps * ref) {
                h(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }

        if (lo == hi) {
            res.eigenvalues[hi] = h(hi, hi);
            --hi;
            iter_this = 0;
            continue;
        }
        if (lo == hi - 1) {
            const cx a = h(lo, lo), b = h(lo, hi), c = h(hi, lo), d = h(hi, hi);
            auto [l1, l2] = eig2x2(a, b, c, d);
            if (full_t || q) {
                // rotate so the block becomes upper triangular with l1 first
                cx v1 = b, v2 = l1 - a;
                if (std::abs(l1 - d) + std::abs(c) > std::abs(v1) + std::abs(v2)) {
                    v1 = l1 - d;
                    v2 = c;
                }
                const double vn = std::sqrt(std::norm(v1) + std::norm(v2));
                Rot g;
                if (vn > 0.0) g = Rot{std::conj(v1 / vn), std::conj(v2 / vn)};
                const std::size_t jhi = full_t ? n - 1 : static_cast<std::size_t>(hi);
                const std::size_t rlo = full_t ? 0 : static_cast<std::size_t>(lo);
                rot_rows(h, lo, static_cast<std::size_t>(lo), jhi, g);
                rot_cols(h, lo, rlo, static_cast<std::size_t>(hi), g);
                if (q) rot_cols(*q, lo, 0, n - 1, g);
                h(hi, lo) = 0.0;
                res.eigenvalues[lo] = h(lo, lo);
                res.eigenvalues[hi] = h(hi, hi);
            } else {
                res.eigenvalues[lo] = l1;
                res.eigenvalues[hi] = l2;
            }
            hi -= 2;
            iter_this = 0;
            continue;
        }

        ++iter_this;
        ++res.iterations;
        if (iter_this > kMaxIterPerEig) fail(hi);

        cx sigma;
        if (iter_this % 10 == 0) {
            // exceptional shift after a stall
            double ad = std::abs(h(hi, hi - 1));
            if (hi - 2 >= lo) ad += std::abs(h(hi - 1, hi - 2));
            sigma = h(hi, hi) + 1.5 * ad;
        } else {
            sigma = wilkinson_shift(h, hi);
        }

        const std::size_t l = static_cast<std::size_t>(lo);
        const std::size_t m = static_cast<std::size_t>(hi);

        // bulge chase with both-side updates applied inside the active
        // block; the off-block panels receive one-sided updates and are
        // batched after the sweep so every column is walked contiguously
        for (std::size_t i = l; i < m; ++i) {
            Rot g;
            if (i == l) {
                g = Rot::zero_second(h(l, l) - sigma, h(l + 1, l));
            } else {
                g = Rot::zero_second(h(i, i - 1), h(i + 1, i - 1));
            }
            rots[i] = g;
            rot_rows(h, i, i == l ? l : i - 1, m, g);
            rot_cols(h, i, l, std::min(i + 2, m), g);
            if (q) rot_cols(*q, i, 0, n - 1, g);
            if (i > l) h(i + 1, i - 1) = 0.0;
        }
        if (full_t) {
            // right panel: rows of the active block, columns past it
            for (std::size_t j = m + 1; j < n; ++j) {
                cx* cj = h.col(j);
                for (std::size_t i = l; i < m; ++i) {
                    const Rot& g = rots[i];
                    const cx x = cj[i], y = cj[i + 1];
                    cj[i] = g.alpha * x + g.beta * y;
                    cj[i + 1] = -std::conj(g.beta) * x + std::conj(g.alpha) * y;
                }
            }
            // top panel: rows above the active block, columns of it
            if (l > 0)
                for (std::size_t i = l; i < m; ++i) rot_cols(h, i, 0, l - 1, rots[i]);
        }
    }

    res.converged = true;
    return res;
}

} // namespace

HouseholderReflector householder_exchanging(const CVec& v) {
    const double nv = vec_norm(v);
    if (nv == 0.0) throw InvalidInput("householder_exchanging: zero vector");
    HouseholderReflector r;
    r.dim = v.size();
    r.phase = unit_phase(v[0]);
    CVec u(v);
    for (auto& x : u) x /= nv;
    u[0] -= r.phase;
    const double un = vec_norm(u);
    if (un < 1e-15) return r; // v is already (a phase multiple of) e1
    for (auto& x : u) x /= un;
    r.u = std::move(u);
    return r;
}

ComplexMatrix HouseholderReflector::dense() const {
    ComplexMatrix m = ComplexMatrix::identity(dim);
    if (is_identity()) return m;
    for (std::size_t j = 0; j < dim; ++j)
        for (std::size_t i = 0; i < dim; ++i) m(i, j) -= 2.0 * u[i] * std::conj(u[j]);
    return m;
}

CVec HouseholderReflector::apply(const CVec& x) const {
    if (x.size() != dim) throw InvalidInput("reflector apply: dimension mismatch");
    if (is_identity()) return x;
    CVec y(x);
    const cx s = 2.0 * vec_dot(u, x);
    for (std::size_t i = 0; i < dim; ++i) y[i] -= s * u[i];
    return y;
}

void HouseholderReflector::apply_left(ComplexMatrix& a) const {
    if (a.rows() != dim) throw InvalidInput("reflector apply_left: dimension mismatch");
    if (is_identity()) return;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        cx* c = a.col(j);
        cx s = 0.0;
        for (std::size_t i = 0; i < dim; ++i) s += std::conj(u[i]) * c[i];
        s *= 2.0;
        for (std::size_t i = 0; i < dim; ++i) c[i] -= s * u[i];
    }
}

void HouseholderReflector::apply_right(ComplexMatrix& a) const {
    if (a.cols() != dim) throw InvalidInput("reflector apply_right: dimension mismatch");
    if (is_identity()) return;
    CVec w(a.rows(), cx(0.0));
    for (std::size_t j = 0; j < dim; ++j) {
        const cx uj = u[j];
        const cx* c = a.col(j);
        for (std::size_t i = 0; i < a.rows(); ++i) w[i] += c[i] * uj;
    }
    for (std::size_t j = 0; j < dim; ++j) {
        const cx s = 2.0 * std::conj(u[j]);
        cx* c = a.col(j);
        for (std::size_t i = 0; i < a.rows(); ++i) c[i] -= s * w[i];
    }
}

SpectrumResult eigenvalues_complex(const ComplexMatrix& a) {
    if (!a.square()) throw InvalidInput("eigenvalues_complex: matrix must be square");
    if (!a.all_finite()) throw InvalidInput("eigenvalues_complex: non-finite entries");
    ComplexMatrix h(a);
    hessenberg_reduce(h, nullptr);
    return hessenberg_qr(h, nullptr, false);
}

SchurDecomposition schur_complex(const ComplexMatrix& a) {
    if (!a.square()) throw InvalidInput("schur_complex: matrix must be square");
    if (!a.all_finite()) throw InvalidInput("schur_complex: non-finite entries");
    SchurDecomposition s;
    s.t = a;
    hessenberg_reduce(s.t, &s.q);
    s.spectrum = hessenberg_qr(s.t, &s.q, true);
    // backward error ||A - Q T Q*||_F / ||A||_F
    const ComplexMatrix qt = gemm(s.q, s.t);
    const ComplexMatrix rec = gemm(qt, s.q, Op::None, Op::Adjoint);
    const double na = a.norm_fro();
    s.spectrum.backward_error = na > 0.0 ? (rec - a).norm_fro() / na : (rec - a).norm_fro();
    return s;
}

namespace {

// Householder tridiagonalization of a Hermitian matrix (in place on the lower
// part), then a diagonal phase similarity making the subdiagonal real
// nonnegative. u_acc receives the transformation when vectors are wanted.
void tridiagonalize(ComplexMatrix& a, std::vector<double>& d, std::vector<double>& e,
                    ComplexMatrix* u_acc) {
    const std::size_t n = a.rows();
    d.assign(n, 0.0);
    e.assign(n > 0 ? n - 1 : 0, 0.0);
    if (n == 0) return;

    CVec esub(n > 1 ? n - 1 : 0, cx(0.0));
    std::vector<CVec> reflectors; // stored for the vector accumulation pass
    if (u_acc) reflectors.resize(n >= 3 ? n - 2 : 0);

    CVec u, p;
    for (std::size_t k = 0; k + 2 < n; ++k) {
        const std::size_t m = n - k - 1;
        cx* colk = a.col(k);
        double xnorm2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) xnorm2 += std::norm(colk[k + 1 + i]);
        const double xnorm = std::sqrt(xnorm2);
        if (xnorm == 0.0) {
            esub[k] = 0.0;
            if (u_acc) reflectors[k].clear();
            continue;
        }
        const cx alpha = -unit_phase(colk[k + 1]) * xnorm;
        u.assign(m, cx(0.0));
        double un2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            u[i] = colk[k + 1 + i];
            if (i == 0) u[i] -= alpha;
            un2 += std::norm(u[i]);
        }
        const double un = std::sqrt(un2);
        if (un < xnorm * 1e-300) {
            esub[k] = colk[k + 1];
            if (u_acc) reflectors[k].clear();
            continue;
        }
        for (std::size_t i = 0; i < m; ++i) u[i] /= un;

        // p = A22 u, rank-2 update A22 -= u w* + w u*
        p.assign(m, cx(0.0));
#ifdef _OPENMP
#pragma omp parallel if (m > 192)
        {
            const int nt = omp_get_num_threads();
            const int tid = omp_get_thread_num();
            const std::size_t lo = m * tid / nt, hi2 = m * (tid + 1) / nt;
            for (std::size_t j = 0; j < m; ++j) {
                const cx uj = u[j];
                const cx* c = a.col(k + 1 + j) + k + 1;
                for (std::size_t i = lo; i < hi2; ++i) p[i] += c[i] * uj;
            }
        }
#else
        for (std::size_t j = 0; j < m; ++j) {
            const cx uj = u[j];
            const cx* c = a.col(k + 1 + j) + k + 1;
            for (std::size_t i = 0; i < m; ++i) p[i] += c[i] * uj;
        }
#endif
        const cx beta = vec_dot(u, p); // real up to rounding
        CVec w(m);
        for (std::size_t i = 0; i < m; ++i) w[i] = 2.0 * p[i] - 2.0 * beta * u[i];

#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (m > 192)
#endif
        for (std::size_t j = 0; j < m; ++j) {
            cx* c = a.col(k + 1 + j) + k + 1;
            const cx wj = std::conj(w[j]);
            const cx uj = std::conj(u[j]);
            for (std::size_t i = 0; i < m; ++i) c[i] -= u[i] * wj + w[i] * uj;
        }

        esub[k] = alpha;
        if (u_acc) reflectors[k] = u;
    }
    if (n > 1) esub[n - 2] = a(n - 1, n - 2);
    for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i).real();

    // phase similarity: subdiagonal becomes |esub|
    CVec dphase(n, cx(1.0, 0.0));
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double ae = std::abs(esub[k]);
        e[k] = ae;
        dphase[k + 1] = dphase[k] * (ae > 0.0 ? esub[k] / ae : cx(1.0));
    }

    if (u_acc) {
        // U = P_0 P_1 ... P_{n-3} diag(dphase)
        ComplexMatrix& uu = *u_acc;
        uu = ComplexMatrix(n, n);
        for (std::size_t j = 0; j < n; ++j) uu(j, j) = dphase[j];
        for (std::size_t kk = reflectors.size(); kk-- > 0;) {
            const CVec& v = reflectors[kk];
            if (v.empty()) continue;
            const std::size_t m = v.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n > 192)
#endif
            for (std::size_t j = 0; j < n; ++j) {
                cx* c = uu.col(j) + kk + 1;
                cx s = 0.0;
                for (std::size_t i = 0; i < m; ++i) s += std::conj(v[i]) * c[i];
                s *= 2.0;
                for (std::size_t i = 0; i < m; ++i) c[i] -= s * v[i];
            }
        }
    }
}

// Implicit-shift QL on a real symmetric tridiagonal, rotating the (complex)
// columns of u when present.
void tql_implicit(std::vector<double>& d, std::vector<double>& e, ComplexMatrix* u) {
    const std::size_t n = d.size();
    if (n <= 1) return;
    e.push_back(0.0);
    const double eps = DBL_EPSILON;

    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (iter++ == 50)
                    throw ConvergenceError("tridiagonal QL failed to converge",
                                           CVec(d.begin(), d.end()));
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                bool underflow = false;
                for (std::size_t i1 = m; i1-- > l;) {
                    double f = s * e[i1];
                    const double b = c * e[i1];
                    r = std::hypot(f, g);
                    e[i1 + 1] = r;
                    if (r == 0.0) {
                        d[i1 + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i1 + 1] - p;
                    r = (d[i1] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i1 + 1] = g + p;
                    g = c * r - b;
                    if (u) {
                        cx* ci = u->col(i1);
                        cx* cj = u->col(i1 + 1);
                        const std::size_t nn = u->rows();
                        for (std::size_t k2 = 0; k2 < nn; ++k2) {
                            const cx f2 = cj[k2];
                            cj[k2] = s * ci[k2] + c * f2;
                            ci[k2] = c * ci[k2] - s * f2;
                        }
                    }
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

} // namespace

EighResult eigh(const ComplexMatrix& h, bool want_vectors) {
    if (!h.square()) throw InvalidInput("eigh: matrix must be square");
    const std::size_t n = h.rows();
    const double scale = std::max(h.norm_max(), 1.0);
    // hermiticity check, then symmetrize
    ComplexMatrix a(n, n);
    double herm_defect = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i <= j; ++i) {
            const cx x = h(i, j), y = std::conj(h(j, i));
            herm_defect = std::max(herm_defect, std::abs(x - y));
            const cx v = 0.5 * (x + y);
            a(i, j) = v;
            a(j, i) = std::conj(v);
        }
    if (herm_defect > 1e-12 * scale)
        throw InvalidInput("eigh: input is not Hermitian to tolerance");

    EighResult res;
    std::vector<double> d, e;
    ComplexMatrix u;
    tridiagonalize(a, d, e, want_vectors ? &u : nullptr);
    tql_implicit(d, e, want_vectors ? &u : nullptr);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return d[i] < d[j]; });
    res.eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.eigenvalues[i] = d[order[i]];
    if (want_vectors) {
        res.vectors = ComplexMatrix(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            const cx* src = u.col(order[j]);
            cx* dst = res.vectors.col(j);
            std::copy(src, src + n, dst);
        }
    }
    return res;
}

SvdResult svd_via_hermitisation(const ComplexMatrix& a) {
    if (!a.square()) throw InvalidInput("svd_via_hermitisation: matrix must be square");
    const std::size_t n = a.rows();
    SvdResult res;
    if (n == 0) return res;

    if (a.norm_max() == 0.0) {
        res.u = ComplexMatrix::identity(n);
        res.v = ComplexMatrix::identity(n);
        res.singular_values.assign(n, 0.0);
        return res;
    }

    ComplexMatrix big(2 * n, 2 * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            big(i, n + j) = a(i, j);
            big(n + j, i) = std::conj(a(i, j));
        }
    EighResult eg = eigh(big, true);

    res.u = ComplexMatrix(n, n);
    res.v = ComplexMatrix(n, n);
    res.singular_values.assign(n, 0.0);
    // A numerically-zero singular value makes the +-s eigenvector pair
    // degenerate and the computed vector an arbitrary mix of (u; v) and
    // (u; -v). The block parts stay parallel to the true singular vectors,
    // so normalize them individually instead of scaling by sqrt(2).
    std::vector<std::size_t> deficient;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = 2 * n - 1 - i; // descending over the nonnegative half
        res.singular_values[i] = std::max(eg.eigenvalues[src], 0.0);
        const cx* q = eg.vectors.col(src);
        double nx = 0.0, ny = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            nx += std::norm(q[r]);
            ny += std::norm(q[n + r]);
        }
        nx = std::sqrt(nx);
        ny = std::sqrt(ny);
        if (nx < 1e-3 || ny < 1e-3) {
            deficient.push_back(i);
            continue;
        }
        for (std::size_t r = 0; r < n; ++r) {
            res.u(r, i) = q[r] / nx;
            res.v(r, i) = q[n + r] / ny;
        }
    }
    if (!deficient.empty()) {
        // complete fully-collapsed block parts by Gram-Schmidt over
        // coordinate seeds (the null-space gauge is free)
        auto complete = [&](ComplexMatrix& m) {
            for (std::size_t i : deficient) {
                cx* ci = m.col(i);
                for (std::size_t seed = 0; seed < n; ++seed) {
                    std::fill(ci, ci + n, cx(0.0));
                    ci[seed] = 1.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        if (j == i) continue;
                        const cx* cj = m.col(j);
                        cx s = 0.0;
                        for (std::size_t r = 0; r < n; ++r) s += std::conj(cj[r]) * ci[r];
                        for (std::size_t r = 0; r < n; ++r) ci[r] -= s * cj[r];
                    }
                    double nn = 0.0;
                    for (std::size_t r = 0; r < n; ++r) nn += std::norm(ci[r]);
                    if (nn > 0.25) {
                        const double inv = 1.0 / std::sqrt(nn);
                        for (std::size_t r = 0; r < n; ++r) ci[r] *= inv;
                        break;
                    }
                }
            }
        };
        complete(res.u);
        complete(res.v);
    }
    return res;
}

LuFactorization lu_factor(ComplexMatrix a) {
    if (!a.square()) throw InvalidInput("lu_factor: matrix must be square");
    const std::size_t n = a.rows();
    LuFactorization f;
    f.perm.resize(n);
    std::iota(f.perm.begin(), f.perm.end(), 0);
    const double threshold = 1e-14 * std::max(a.norm_max(), DBL_MIN);

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::abs(a(i, k));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best <= threshold)
            throw SingularMatrix("lu_factor: matrix singular to working tolerance", k);
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(f.perm[k], f.perm[piv]);
            f.sign = -f.sign;
        }
        const cx akk = a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) a(i, k) /= akk;
        for (std::size_t j = k + 1; j < n; ++j) {
            const cx akj = a(k, j);
            if (akj == cx(0.0)) continue;
            cx* cj = a.col(j);
            const cx* ck = a.col(k);
            for (std::size_t i = k + 1; i < n; ++i) cj[i] -= ck[i] * akj;
        }
    }
    f.lu = std::move(a);
    return f;
}

cx LuFactorization::det() const {
    cx d = static_cast<double>(sign);
    for (std::size_t i = 0; i < lu.rows(); ++i) d *= lu(i, i);
    return d;
}

double LuFactorization::log_abs_det() const {
    double s = 0.0;
    for (std::size_t i = 0; i < lu.rows(); ++i) s += std::log(std::abs(lu(i, i)));
    return s;
}

ComplexMatrix lu_solve(const LuFactorization& f, const ComplexMatrix& b) {
    const std::size_t n = f.lu.rows();
    if (b.rows() != n) throw InvalidInput("lu_solve: rhs dimension mismatch");
    ComplexMatrix x(n, b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j)
        for (std::size_t i = 0; i < n; ++i) x(i, j) = b(f.perm[i], j);
    for (std::size_t j = 0; j < b.cols(); ++j) {
        cx* xc = x.col(j);
        for (std::size_t k = 0; k < n; ++k) { // forward, unit lower
            const cx xk = xc[k];
            if (xk == cx(0.0)) continue;
            const cx* ck = f.lu.col(k);
            for (std::size_t i = k + 1; i < n; ++i) xc[i] -= ck[i] * xk;
        }
        for (std::size_t k = n; k-- > 0;) { // backward, upper
            xc[k] /= f.lu(k, k);
            const cx xk = xc[k];
            if (xk == cx(0.0)) continue;
            const cx* ck = f.lu.col(k);
            for (std::size_t i = 0; i < k; ++i) xc[i] -= ck[i] * xk;
        }
    }
    return x;
}

ComplexMatrix solve_shifted(const ComplexMatrix& h, cx shift, const ComplexMatrix& b) {
    if (!h.square()) throw InvalidInput("solve_shifted: matrix must be square");
    ComplexMatrix m(h);
    m.shift_diagonal(shift);
    return lu_solve(lu_factor(std::move(m)), b);
}

cx det(const ComplexMatrix& a) {
    try {
        return lu_factor(a).det();
    } catch (const SingularMatrix&) {
        return cx(0.0);
    }
}

ComplexMatrix inverse(const ComplexMatrix& a) {
    return lu_solve(lu_factor(a), ComplexMatrix::identity(a.rows()));
}

double operator_norm(const ComplexMatrix& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    if (a.square()) return svd_via_hermitisation(a).singular_values[0];
    const ComplexMatrix g = gemm(a, a, Op::Adjoint, Op::None);
    EighResult eg = eigh(g, false);
    return std::sqrt(std::max(eg.eigenvalues.back(), 0.0));
}

} // namespace rmt
