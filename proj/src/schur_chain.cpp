#include "rmt/schur_chain.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "rmt/gemm.hpp"
#include "rmt/generator.hpp"
#include "rmt/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rmt {

namespace {

double sphere_volume(std::size_t complex_dim) {
    // surface of the unit sphere in C^m = R^{2m}: 2 pi^m / (m-1)!
    double v = 2.0;
    for (std::size_t i = 0; i < complex_dim; ++i) v *= M_PI;
    for (std::size_t i = 2; i < complex_dim; ++i) v /= static_cast<double>(i);
    return v;
}

} // namespace

void SchurChain::validate() const {
    if (k == 0 || k > n) throw InvalidInput("SchurChain: need 1 <= k <= N");
    if (z_list.size() != k || v_list.size() != k || w_list.size() != k)
        throw InvalidInput("SchurChain: list sizes must equal k");
    for (std::size_t i = 0; i < k; ++i) {
        if (v_list[i].size() != n - i) throw InvalidInput("SchurChain: v dimension mismatch");
        if (w_list[i].size() != n - i - 1) throw InvalidInput("SchurChain: w dimension mismatch");
        const double nv = vec_norm(v_list[i]);
        if (std::abs(nv - 1.0) > 1e-10) throw InvalidInput("SchurChain: v not unit");
        if (v_list[i][0].real() < -1e-12 || std::abs(v_list[i][0].imag()) > 1e-12)
            throw InvalidInput("SchurChain: v first coordinate must be real nonnegative");
    }
    if (m_k.rows() != n - k || m_k.cols() != n - k)
        throw InvalidInput("SchurChain: trailing matrix dimension mismatch");
}

ComplexMatrix schur_step_forward(cx z, const CVec& v, const CVec& w, const ComplexMatrix& m) {
    const std::size_t dim = v.size();
    if (w.size() + 1 != dim || m.rows() + 1 != dim || !m.square())
        throw InvalidInput("schur_step_forward: dimension mismatch");
    ComplexMatrix t(dim, dim);
    t(0, 0) = z;
    for (std::size_t j = 0; j + 1 < dim; ++j) {
        t(0, j + 1) = std::conj(w[j]);
        for (std::size_t i = 0; i + 1 < dim; ++i) t(i + 1, j + 1) = m(i, j);
    }
    const HouseholderReflector r = householder_exchanging(v);
    r.apply_left(t);
    r.apply_right(t);
    return t;
}

SchurStepInverse schur_step_inverse(const ComplexMatrix& m_big, std::size_t eigen_index) {
    if (!m_big.square() || m_big.rows() < 2)
        throw InvalidInput("schur_step_inverse: need a square matrix of dimension >= 2");
    const std::size_t dim = m_big.rows();

    SpectrumResult spec = eigenvalues_complex(m_big);
    CVec eigs = spec.eigenvalues;
    std::sort(eigs.begin(), eigs.end(), [](cx a, cx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i + 1; j < dim; ++j)
            if (std::abs(eigs[i] - eigs[j]) <= 1e-8)
                throw DegenerateSpectrum("schur_step_inverse: eigenvalue gap below 1e-8");
    if (eigen_index >= dim) throw InvalidInput("schur_step_inverse: eigenvalue index out of range");

    SchurStepInverse out;
    out.z = eigs[eigen_index];

    // eigenvector as the smallest right singular vector of M - z
    ComplexMatrix shifted(m_big);
    shifted.shift_diagonal(out.z);
    const SvdResult sv = svd_via_hermitisation(shifted);
    CVec v(dim);
    for (std::size_t i = 0; i < dim; ++i) v[i] = sv.v(i, dim - 1);
    // gauge: first coordinate real nonnegative
    const double a0 = std::abs(v[0]);
    if (a0 > 0.0) {
        const cx ph = std::conj(v[0]) / a0;
        for (auto& x : v) x *= ph;
        v[0] = cx(v[0].real(), 0.0);
    }
    const double nv = vec_norm(v);
    for (auto& x : v) x /= nv;
    out.v = v;

    // [0; w] = R (1 - v v*) M* v   and   [[0,0],[0,M_small]] = R (1-vv*) M (1-vv*) R
    const HouseholderReflector r = householder_exchanging(v);
    CVec mv = adj_vec(m_big, v);
    const cx proj = vec_dot(v, mv);
    for (std::size_t i = 0; i < dim; ++i) mv[i] -= proj * v[i];
    const CVec y = r.apply(mv);
    out.w.assign(y.begin() + 1, y.end());

    ComplexMatrix p = ComplexMatrix::identity(dim);
    for (std::size_t j = 0; j < dim; ++j)
        for (std::size_t i = 0; i < dim; ++i) p(i, j) -= v[i] * std::conj(v[j]);
    ComplexMatrix core = gemm(gemm(p, m_big), p);
    r.apply_left(core);
    r.apply_right(core);
    out.m_small = core.block(1, 1, dim - 1, dim - 1);
    return out;
}

ComplexMatrix assemble(const SchurChain& chain) {
    chain.validate();
    ComplexMatrix m = chain.m_k;
    for (std::size_t i = chain.k; i-- > 0;)
        m = schur_step_forward(chain.z_list[i], chain.v_list[i], chain.w_list[i], m);
    return m;
}

double jacobian(const SchurChain& chain) {
    chain.validate();
    double j = 1.0;
    for (std::size_t i = 0; i < chain.k; ++i)
        for (std::size_t l = i + 1; l < chain.k; ++l)
            j *= std::norm(chain.z_list[i] - chain.z_list[l]);
    for (std::size_t i = 0; i < chain.k; ++i) {
        ComplexMatrix shifted(chain.m_k);
        shifted *= cx(-1.0);
        shifted.shift_diagonal(-chain.z_list[i]); // z_i - M_k
        j *= std::norm(det(shifted));
    }
    return j;
}

namespace {

// Orthonormal basis of the complex orthogonal complement of v: columns 2..m
// of the exchange reflector R(v).
std::vector<CVec> horizontal_basis(const CVec& v) {
    const std::size_t m = v.size();
    const HouseholderReflector r = householder_exchanging(v);
    const ComplexMatrix rd = r.dense();
    std::vector<CVec> basis;
    basis.reserve(m - 1);
    for (std::size_t j = 1; j < m; ++j) {
        CVec q(m);
        for (std::size_t i = 0; i < m; ++i) q[i] = rd(i, j);
        basis.push_back(std::move(q));
    }
    return basis;
}

} // namespace

double jacobian_fd(const SchurChain& chain, double step) {
    chain.validate();
    const std::size_t n = chain.n, k = chain.k;
    const std::size_t dim = 2 * n * n;

    std::vector<std::vector<CVec>> bases;
    for (std::size_t i = 0; i < k; ++i) bases.push_back(horizontal_basis(chain.v_list[i]));

    // evaluate the assembled matrix at perturbed coordinates
    auto eval = [&](const std::vector<double>& theta) {
        std::size_t idx = 0;
        CVec zs(k);
        std::vector<CVec> vs(k), ws(k);
        for (std::size_t i = 0; i < k; ++i) {
            zs[i] = chain.z_list[i] + cx(theta[idx], theta[idx + 1]);
            idx += 2;
            CVec v = chain.v_list[i];
            const std::size_t m = v.size();
            for (std::size_t b = 0; b + 1 < m; ++b) {
                const cx coef(theta[idx], theta[idx + 1]);
                idx += 2;
                for (std::size_t l = 0; l < m; ++l) v[l] += coef * bases[i][b][l];
            }
            const double nv = vec_norm(v);
            for (auto& x : v) x /= nv;
            vs[i] = std::move(v);
            CVec w = chain.w_list[i];
            for (auto& x : w) {
                x += cx(theta[idx], theta[idx + 1]);
                idx += 2;
            }
            ws[i] = std::move(w);
        }
        ComplexMatrix mk = chain.m_k;
        for (std::size_t j = 0; j < mk.cols(); ++j)
            for (std::size_t i2 = 0; i2 < mk.rows(); ++i2) {
                mk(i2, j) += cx(theta[idx], theta[idx + 1]);
                idx += 2;
            }
        ComplexMatrix m = mk;
        for (std::size_t i = k; i-- > 0;) m = schur_step_forward(zs[i], vs[i], ws[i], m);
        // flatten to 2 n^2 reals
        std::vector<double> out(dim);
        std::size_t o = 0;
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i2 = 0; i2 < n; ++i2) {
                out[o++] = m(i2, j).real();
                out[o++] = m(i2, j).imag();
            }
        return out;
    };

    ComplexMatrix jac(dim, dim);
    std::vector<double> theta(dim, 0.0);
    for (std::size_t c = 0; c < dim; ++c) {
        theta.assign(dim, 0.0);
        theta[c] = step;
        const std::vector<double> fp = eval(theta);
        theta[c] = -step;
        const std::vector<double> fm = eval(theta);
        for (std::size_t r2 = 0; r2 < dim; ++r2)
            jac(r2, c) = (fp[r2] - fm[r2]) / (2.0 * step);
    }
    return std::abs(det(jac));
}

ProjectedMatrixChain project_chain(const ComplexMatrix& a, const std::vector<CVec>& v_list) {
    if (!a.square()) throw InvalidInput("project_chain: matrix must be square");
    ProjectedMatrixChain out;
    out.a_list.push_back(a);
    for (std::size_t i = 0; i < v_list.size(); ++i) {
        const ComplexMatrix& cur = out.a_list.back();
        const CVec& v = v_list[i];
        if (v.size() != cur.rows()) throw InvalidInput("project_chain: v dimension mismatch");
        const std::size_t dim = v.size();

        out.a_scalars.push_back(vec_dot(v, mat_vec(cur, v)));

        const HouseholderReflector r = householder_exchanging(v);
        auto project_out = [&v, dim](CVec x) {
            const cx s = vec_dot(v, x);
            for (std::size_t l = 0; l < dim; ++l) x[l] -= s * v[l];
            return x;
        };
        const CVec yb = r.apply(project_out(adj_vec(cur, v)));
        const CVec yc = r.apply(project_out(mat_vec(cur, v)));
        out.b_list.emplace_back(yb.begin() + 1, yb.end());
        out.c_list.emplace_back(yc.begin() + 1, yc.end());

        ComplexMatrix p = ComplexMatrix::identity(dim);
        for (std::size_t jj = 0; jj < dim; ++jj)
            for (std::size_t ii = 0; ii < dim; ++ii) p(ii, jj) -= v[ii] * std::conj(v[jj]);
        ComplexMatrix core = gemm(gemm(p, cur), p);
        r.apply_left(core);
        r.apply_right(core);
        out.a_list.push_back(core.block(1, 1, dim - 1, dim - 1));
    }
    return out;
}

KPointComparison kpoint_identity_mc(std::size_t n, std::size_t k, double t,
                                    const ComplexMatrix& a, const std::vector<cx>& z_eval,
                                    std::size_t samples, std::uint64_t seed, double bin_radius) {
    if (n > 4 || k > 2 || k == 0) throw InvalidInput("kpoint_identity_mc: desk scale is N<=4, k<=2");
    if (t <= 0.0) throw InvalidInput("kpoint_identity_mc: t must be positive");
    if (a.rows() != n || z_eval.size() != k)
        throw InvalidInput("kpoint_identity_mc: shape mismatch");

    const double dn = static_cast<double>(n);
    const double bin_area = M_PI * bin_radius * bin_radius;

    // LHS: eigenvalue histogram of A + sqrt(t) B around the evaluation points
    std::vector<double> lhs_vals(samples, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t s = 0; s < samples; ++s) {
        Rng rng(seed, s, streams::kMatrixB);
        ComplexMatrix m(a);
        const double scale = std::sqrt(t / dn);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) m(i, j) += scale * rng.gaussian();
        const SpectrumResult spec = eigenvalues_complex(m);
        if (k == 1) {
            std::size_t count = 0;
            for (cx lam : spec.eigenvalues)
                if (std::abs(lam - z_eval[0]) <= bin_radius) ++count;
            lhs_vals[s] = static_cast<double>(count) / bin_area;
        } else {
            std::size_t count = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    if (i == j) continue;
                    if (std::abs(spec.eigenvalues[i] - z_eval[0]) <= bin_radius &&
                        std::abs(spec.eigenvalues[j] - z_eval[1]) <= bin_radius)
                        ++count;
                }
            lhs_vals[s] = static_cast<double>(count) / (bin_area * bin_area);
        }
    }

    // RHS: sample the change-of-variables integral; the Vandermonde factor
    // rides along per sample at the jittered evaluation points
    double log_pref = 0.0;
    // (1 / (2 pi)^k) (N / (pi t))^{kN - k(k-1)/2} prod Vol
    log_pref -= static_cast<double>(k) * std::log(2.0 * M_PI);
    const double expo = static_cast<double>(k) * dn - 0.5 * static_cast<double>(k * (k - 1));
    log_pref += expo * std::log(dn / (M_PI * t));
    for (std::size_t i = 0; i < k; ++i) log_pref += std::log(sphere_volume(n - i));
    const double pref = std::exp(log_pref);

    std::vector<double> rhs_vals(samples, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t s = 0; s < samples; ++s) {
        Rng rng_v(seed, s, streams::kSphere);
        Rng rng_g(seed, s, streams::kGauss);
        Rng rng_z(seed, s, streams::kMisc);
        // evaluate at points jittered uniformly over the histogram disks so
        // both estimators target the same disk-smoothed quantity
        std::vector<cx> zs(k);
        for (std::size_t i = 0; i < k; ++i) {
            const double rr = bin_radius * std::sqrt(rng_z.uniform());
            const double ang = 2.0 * M_PI * rng_z.uniform();
            zs[i] = z_eval[i] + rr * cx(std::cos(ang), std::sin(ang));
        }
        double log_weight = 0.0;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j)
                log_weight += 2.0 * std::log(std::max(std::abs(zs[i] - zs[j]), 1e-300));
        ComplexMatrix cur(a);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t dim = n - i;
            const CVec v = rng_v.sphere_point(dim);
            const cx ai = vec_dot(v, mat_vec(cur, v));
            // c_i = projected column; only its norm enters the weight
            CVec yc = mat_vec(cur, v);
            const cx proj = vec_dot(v, yc);
            for (std::size_t l = 0; l < dim; ++l) yc[l] -= proj * v[l];
            const double c_norm2 = vec_norm(yc) * vec_norm(yc);
            log_weight -= (dn / t) * (std::norm(zs[i] - ai) + c_norm2);
            // project the matrix one level down
            const HouseholderReflector r = householder_exchanging(v);
            ComplexMatrix p = ComplexMatrix::identity(dim);
            for (std::size_t jj = 0; jj < dim; ++jj)
                for (std::size_t ii = 0; ii < dim; ++ii) p(ii, jj) -= v[ii] * std::conj(v[jj]);
            ComplexMatrix core = gemm(gemm(p, cur), p);
            r.apply_left(core);
            r.apply_right(core);
            cur = core.block(1, 1, dim - 1, dim - 1);
        }
        // trailing matrix sampled from its Gaussian weight
        const double scale = std::sqrt(t / dn);
        ComplexMatrix mk(cur);
        for (std::size_t j = 0; j + k < n; ++j)
            for (std::size_t i = 0; i + k < n; ++i) mk(i, j) += scale * rng_g.gaussian();
        for (std::size_t i = 0; i < k; ++i) {
            ComplexMatrix shifted(mk);
            shifted *= cx(-1.0);
            shifted.shift_diagonal(-zs[i]); // z_i - M_k
            const cx dd = det(shifted);
            log_weight += 2.0 * std::log(std::max(std::abs(dd), 1e-300));
        }
        rhs_vals[s] = std::exp(log_weight);
    }

    auto mean_stderr = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - m) * (x - m);
        var /= static_cast<double>(v.size() - 1);
        return std::pair<double, double>(m, std::sqrt(var / static_cast<double>(v.size())));
    };

    KPointComparison out;
    auto [lm, ls] = mean_stderr(lhs_vals);
    out.lhs_estimate = lm;
    out.lhs_stderr = ls;
    auto [rm, rs] = mean_stderr(rhs_vals);
    out.rhs_estimate = pref * rm;
    out.rhs_stderr = pref * rs;
    for (double x : lhs_vals) out.lhs_counts += x > 0.0 ? 1 : 0;
    const double denom = std::max(std::abs(out.lhs_estimate), std::abs(out.rhs_estimate));
    out.inconclusive =
        denom > 0.0 && std::max(out.lhs_stderr, out.rhs_stderr) / denom > 0.5;
    return out;
}

std::string SchurChain::to_json() const {
    nlohmann::json j;
    j["n"] = n;
    j["k"] = k;
    auto cvec = [](const CVec& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (cx x : v) arr.push_back({x.real(), x.imag()});
        return arr;
    };
    j["z"] = cvec(z_list);
    j["v"] = nlohmann::json::array();
    for (const auto& v : v_list) j["v"].push_back(cvec(v));
    j["w"] = nlohmann::json::array();
    for (const auto& w : w_list) j["w"].push_back(cvec(w));
    nlohmann::json mk = nlohmann::json::array();
    for (std::size_t col = 0; col < m_k.cols(); ++col) {
        nlohmann::json c = nlohmann::json::array();
        for (std::size_t row = 0; row < m_k.rows(); ++row)
            c.push_back({m_k(row, col).real(), m_k(row, col).imag()});
        mk.push_back(c);
    }
    j["m_k"] = mk;
    j["m_k_dim"] = m_k.rows();
    return j.dump(2);
}

SchurChain SchurChain::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    SchurChain c;
    c.n = j.at("n").get<std::size_t>();
    c.k = j.at("k").get<std::size_t>();
    auto cvec = [](const nlohmann::json& arr) {
        CVec v;
        for (const auto& p : arr) v.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        return v;
    };
    c.z_list = cvec(j.at("z"));
    for (const auto& v : j.at("v")) c.v_list.push_back(cvec(v));
    for (const auto& w : j.at("w")) c.w_list.push_back(cvec(w));
    const std::size_t dim = j.at("m_k_dim").get<std::size_t>();
    c.m_k = ComplexMatrix(dim, dim);
    const auto& mk = j.at("m_k");
    for (std::size_t col = 0; col < dim; ++col)
        for (std::size_t row = 0; row < dim; ++row) {
            c.m_k(row, col) = cx(mk.at(col).at(row).at(0).get<double>(),
                                 mk.at(col).at(row).at(1).get<double>());
        }
    c.validate();
    return c;
}

} // namespace rmt
