#include "rmt/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "rmt/gemm.hpp"
#include "rmt/quadrature.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rmt {

ComplexMatrix hermitise(const ComplexMatrix& a, cx z) {
    if (!a.square()) throw InvalidInput("hermitise: matrix must be square");
    const std::size_t n = a.rows();
    ComplexMatrix h(2 * n, 2 * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            cx v = a(i, j);
            if (i == j) v -= z;
            h(i, n + j) = v;
            h(n + j, i) = std::conj(v);
        }
    return h;
}

HermitisationFactorization factorize(const ComplexMatrix& a, cx z) {
    if (!a.square()) throw InvalidInput("factorize: matrix must be square");
    ComplexMatrix shifted(a);
    shifted.shift_diagonal(z);
    SvdResult svd = svd_via_hermitisation(shifted);

    HermitisationFactorization f;
    f.z = z;
    f.n = a.rows();
    f.s = std::move(svd.singular_values);
    f.u = std::move(svd.u);
    f.v = std::move(svd.v);
    f.w = gemm(f.v, f.u, Op::Adjoint, Op::None);
    f.w_diag.resize(f.n);
    for (std::size_t i = 0; i < f.n; ++i) f.w_diag[i] = f.w(i, i);
    return f;
}

double HermitisationFactorization::h_trace(double eta) const {
    const double e2 = eta * eta;
    double sum = 0.0;
    for (double si : s) sum += 1.0 / (e2 + si * si);
    return sum / static_cast<double>(n);
}

double HermitisationFactorization::h2_trace(double eta) const {
    const double e2 = eta * eta;
    double sum = 0.0;
    for (double si : s) {
        const double d = 1.0 / (e2 + si * si);
        sum += d * d;
    }
    return sum / static_cast<double>(n);
}

double HermitisationFactorization::logdet_shifted(double eta) const {
    const double e2 = eta * eta;
    double sum = 0.0;
    for (double si : s) sum += std::log(e2 + si * si);
    return sum;
}

double HermitisationFactorization::logdet() const {
    double sum = 0.0;
    for (double si : s) sum += std::log(si * si);
    return sum;
}

ResolventDiagnostics diagnostics(const HermitisationFactorization& f, double eta, double t) {
    if (eta <= 0.0) throw InvalidInput("diagnostics: eta must be positive");
    const std::size_t n = f.n;
    const double e2 = eta * eta;
    const double invn = 1.0 / static_cast<double>(n);

    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = 1.0 / (e2 + f.s[i] * f.s[i]);

    ResolventDiagnostics r;
    r.eta = eta;
    r.t = t;

    double g = 0.0, gamma = 0.0;
    cx beta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        g += d[i];
        gamma += d[i] * d[i];
        beta += f.s[i] * d[i] * d[i] * f.w_diag[i];
    }
    r.g = eta * g * invn;
    r.gamma = e2 * gamma * invn;
    r.beta = eta * beta * invn;

    // alpha = eta^2/N sum_ij |W_ij|^2 d_i d_j,
    // delta = 1/N sum_ij (s d)_i (s d)_j W_ij W_ji
    double alpha = 0.0;
    cx delta = 0.0;
    std::vector<double> sd(n);
    for (std::size_t i = 0; i < n; ++i) sd[i] = f.s[i] * d[i];
    for (std::size_t j = 0; j < n; ++j) {
        const cx* wc = f.w.col(j);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += std::norm(wc[i]) * d[i];
        alpha += acc * d[j];
        cx accd = 0.0;
        for (std::size_t i = 0; i < n; ++i) accd += sd[i] * wc[i] * f.w(j, i);
        delta += accd * sd[j];
    }
    r.alpha = e2 * alpha * invn;
    r.delta = delta * invn;

    r.sigma = r.alpha + std::norm(r.beta) / r.gamma;
    r.tau = (r.beta * r.beta + r.gamma * r.delta) / (r.gamma * r.sigma);
    r.phi = t > 0.0 ? e2 / t - f.logdet_shifted(eta) * invn
                    : -f.logdet_shifted(eta) * invn;
    return r;
}

SingleTraces single_traces(const HermitisationFactorization& f, double eta) {
    const double e2 = eta * eta;
    const double invn = 1.0 / static_cast<double>(f.n);
    SingleTraces tr;
    cx ge = 0.0, gestar = 0.0;
    double h = 0.0;
    for (std::size_t i = 0; i < f.n; ++i) {
        const double d = 1.0 / (e2 + f.s[i] * f.s[i]);
        h += d;
        gestar += f.s[i] * d * f.w_diag[i];
        ge += f.s[i] * d * std::conj(f.w_diag[i]);
    }
    tr.g_full = cx(0.0, 2.0 * eta * h * invn);
    tr.g_e = ge * invn;
    tr.g_estar = gestar * invn;
    return tr;
}

namespace {

// Diagonal-scaled copies of W used by the multi-resolvent traces:
// in the singular basis G(eta) E -> [[0, P W*], [0, Q W*]] and
// G(eta) E* -> [[Q W, 0], [P W, 0]] with P = i eta D, Q = S D.
struct ScaledBlocks {
    ComplexMatrix pwstar, qwstar; // P W*, Q W*
    ComplexMatrix qw, pw;         // Q W, P W
};

ScaledBlocks scaled_blocks(const HermitisationFactorization& f, double eta) {
    const std::size_t n = f.n;
    const double e2 = eta * eta;
    ScaledBlocks b;
    b.pwstar = ComplexMatrix(n, n);
    b.qwstar = ComplexMatrix(n, n);
    b.qw = ComplexMatrix(n, n);
    b.pw = ComplexMatrix(n, n);
    std::vector<double> d(n), q(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = 1.0 / (e2 + f.s[i] * f.s[i]);
        q[i] = f.s[i] * d[i];
    }
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            const cx wij = f.w(i, j);
            const cx wsij = std::conj(f.w(j, i)); // (W*)_{ij}
            b.pw(i, j) = cx(0.0, eta * d[i]) * wij;
            b.qw(i, j) = q[i] * wij;
            b.pwstar(i, j) = cx(0.0, eta * d[i]) * wsij;
            b.qwstar(i, j) = q[i] * wsij;
        }
    return b;
}

cx trace_product(const ComplexMatrix& x, const ComplexMatrix& y) {
    // tr(X Y) = sum_ij X_ij Y_ji
    const std::size_t n = x.rows();
    cx s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const cx* xc = x.col(j);
        for (std::size_t i = 0; i < n; ++i) s += xc[i] * y(j, i);
    }
    return s;
}

} // namespace

MultiResolventTraces multi_resolvent_traces(const HermitisationFactorization& f, double eta) {
    const double invn = 1.0 / static_cast<double>(f.n);
    const ScaledBlocks b = scaled_blocks(f, eta);

    MultiResolventTraces out;
    // two-resolvent traces
    out.ge_ge = trace_product(b.qwstar, b.qwstar) * invn;          // <G E G E>
    out.ge_gestar = trace_product(b.pwstar, b.pw) * invn;          // <G E G E*>
    out.gestar_gestar = trace_product(b.qw, b.qw) * invn;          // <G E* G E*>
    out.a2_max = std::max({std::abs(out.ge_ge), std::abs(out.ge_gestar),
                           std::abs(out.gestar_gestar)});

    // pair products for the three-resolvent traces
    // E E   -> column-2 block pair (X Y, Y Y) with X = P W*, Y = Q W*
    const ComplexMatrix ee_top = gemm(b.pwstar, b.qwstar);
    const ComplexMatrix ee_bot = gemm(b.qwstar, b.qwstar);
    // E E*  -> column-1 block pair (X W', Y W') with W' = P W
    const ComplexMatrix ees_top = gemm(b.pwstar, b.pw);
    const ComplexMatrix ees_bot = gemm(b.qwstar, b.pw);
    // E* E  -> column-2 block pair (Z X, W' X) with Z = Q W
    const ComplexMatrix ese_top = gemm(b.qw, b.pwstar);
    const ComplexMatrix ese_bot = gemm(b.pw, b.pwstar);
    // E* E* -> column-1 block pair (Z Z, W' Z)
    const ComplexMatrix eses_top = gemm(b.qw, b.qw);
    const ComplexMatrix eses_bot = gemm(b.pw, b.qw);

    // trace of pair * single: column-2 pairs trace against the bottom block
    // of an E factor / top block of an E* factor, and vice versa.
    const cx t_eee = trace_product(ee_bot, b.qwstar);
    const cx t_eees = trace_product(ee_top, b.pw);
    const cx t_eese = trace_product(ees_bot, b.pwstar); // (E E*) then E: col-1 pair, E factor
    const cx t_eeses = trace_product(ees_top, b.qw);
    const cx t_esee = trace_product(ese_bot, b.qwstar);
    const cx t_esees = trace_product(ese_top, b.pw);
    const cx t_esese = trace_product(eses_bot, b.pwstar);
    const cx t_eseses = trace_product(eses_top, b.qw);

    out.a3_max = 0.0;
    for (cx t : {t_eee, t_eees, t_eese, t_eeses, t_esee, t_esees, t_esese, t_eseses})
        out.a3_max = std::max(out.a3_max, std::abs(t) * invn);
    return out;
}

std::vector<double> log_eta_grid(double eta_min, double eta_max, std::size_t count) {
    if (eta_min <= 0.0 || eta_max < eta_min || count == 0)
        throw InvalidInput("log_eta_grid: bad range");
    std::vector<double> g(count);
    if (count == 1) {
        g[0] = eta_min;
        return g;
    }
    const double l0 = std::log(eta_min), l1 = std::log(eta_max);
    for (std::size_t i = 0; i < count; ++i)
        g[i] = std::exp(l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(count - 1));
    return g;
}

bool AssumptionReport::all_pass() const {
    for (const auto& c : cells)
        if (!c.skipped && !c.pass) return false;
    return true;
}

double AssumptionReport::pass_fraction() const {
    std::size_t total = 0, ok = 0;
    for (const auto& c : cells) {
        if (c.skipped) continue;
        ++total;
        if (c.pass) ++ok;
    }
    return total == 0 ? 0.0 : static_cast<double>(ok) / static_cast<double>(total);
}

void AssumptionReport::write_csv(std::ostream& os) const {
    os << "re_z,im_z,eta,g,alpha,abs_beta,eta_gamma,a2_max,a3_max_scaled,pass\n";
    char buf[256];
    for (const auto& c : cells) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%d\n",
                      c.z.real(), c.z.imag(), c.eta, c.g, c.alpha, c.abs_beta, c.eta_gamma,
                      c.a2_max, c.a3_max_scaled, c.pass ? 1 : 0);
        os << buf;
    }
}

std::string AssumptionReport::json_summary() const {
    std::ostringstream os;
    os.precision(12);
    double gmin = 1e300, gmax = 0, amin = 1e300, amax = 0, bmax = 0, egmin = 1e300, egmax = 0,
           a2max = 0, a3max = 0;
    for (const auto& c : cells) {
        if (c.skipped) continue;
        gmin = std::min(gmin, c.g);
        gmax = std::max(gmax, c.g);
        amin = std::min(amin, c.alpha);
        amax = std::max(amax, c.alpha);
        bmax = std::max(bmax, c.abs_beta);
        egmin = std::min(egmin, c.eta_gamma);
        egmax = std::max(egmax, c.eta_gamma);
        a2max = std::max(a2max, c.a2_max);
        a3max = std::max(a3max, c.a3_max_scaled);
    }
    os << "{\n"
       << "  \"thresholds\": {\"c\": " << thresholds.c_lo << ", \"C\": " << thresholds.c_hi
       << "},\n"
       << "  \"N\": " << n << ",\n"
       << "  \"eta_min\": " << eta_min << ",\n"
       << "  \"eta_below_recommended\": " << (eta_below_recommended ? "true" : "false") << ",\n"
       << "  \"cells\": " << cells.size() << ",\n"
       << "  \"pass_fraction\": " << pass_fraction() << ",\n"
       << "  \"all_pass\": " << (all_pass() ? "true" : "false") << ",\n"
       << "  \"ranges\": {\"g\": [" << gmin << ", " << gmax << "], \"alpha\": [" << amin << ", "
       << amax << "], \"abs_beta_max\": " << bmax << ", \"eta_gamma\": [" << egmin << ", " << egmax
       << "], \"a2_max\": " << a2max << ", \"a3_max_scaled\": " << a3max << "}\n"
       << "}\n";
    return os.str();
}

AssumptionReport audit_assumptions(const ComplexMatrix& a, const std::vector<cx>& z_grid,
                                   const std::vector<double>& eta_grid,
                                   AuditThresholds thresholds) {
    AssumptionReport rep;
    rep.thresholds = thresholds;
    rep.n = a.rows();
    rep.eta_min = eta_grid.empty() ? 0.0 : *std::min_element(eta_grid.begin(), eta_grid.end());
    rep.eta_below_recommended =
        rep.eta_min < 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(rep.n, 1)));
    rep.cells.resize(z_grid.size() * eta_grid.size());

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::size_t zi = 0; zi < z_grid.size(); ++zi) {
        HermitisationFactorization f;
        bool f_ok = true;
        std::string f_err;
        try {
            f = factorize(a, z_grid[zi]);
        } catch (const Error& e) {
            f_ok = false;
            f_err = e.what();
        }
        for (std::size_t ei = 0; ei < eta_grid.size(); ++ei) {
            AuditCell& cell = rep.cells[zi * eta_grid.size() + ei];
            cell.z = z_grid[zi];
            cell.eta = eta_grid[ei];
            if (!f_ok) {
                cell.skipped = true;
                cell.reason = f_err;
                continue;
            }
            try {
                const ResolventDiagnostics dg = diagnostics(f, eta_grid[ei], 1.0);
                const MultiResolventTraces mt = multi_resolvent_traces(f, eta_grid[ei]);
                cell.g = dg.g;
                cell.alpha = dg.alpha;
                cell.abs_beta = std::abs(dg.beta);
                cell.eta_gamma = eta_grid[ei] * dg.gamma;
                cell.a2_max = mt.a2_max;
                cell.a3_max_scaled = eta_grid[ei] * mt.a3_max;
                const double c = thresholds.c_lo, C = thresholds.c_hi;
                cell.pass = cell.g >= c && cell.g <= C && cell.alpha >= c && cell.alpha <= C &&
                            cell.abs_beta <= C && cell.eta_gamma >= c && cell.eta_gamma <= C &&
                            cell.a2_max <= C && cell.a3_max_scaled <= C;
            } catch (const Error& e) {
                cell.skipped = true;
                cell.reason = e.what();
            }
        }
    }
    return rep;
}

double logdet_identity_residual_closed_form(const HermitisationFactorization& f, double t_cut) {
    // Im int_0^T tr G = sum_i log((T^2 + s_i^2) / s_i^2)
    double integral = 0.0;
    for (double si : f.s) integral += std::log((t_cut * t_cut + si * si) / (si * si));
    const double lhs = f.logdet();
    const double rhs = f.logdet_shifted(t_cut) - integral;
    return std::abs(lhs - rhs);
}

double logdet_identity_check(const ComplexMatrix& a, cx z, double t_cut) {
    if (t_cut <= 0.0) throw InvalidInput("logdet_identity_check: T must be positive");
    const HermitisationFactorization f = factorize(a, z);
    const double smin = f.s.empty() ? 0.0 : f.s.back();
    if (smin < 1e-12)
        throw SingularMatrix("logdet_identity_check: Hermitisation singular to tolerance",
                             f.s.size() - 1);

    // Im tr G(eta) = sum_i 2 eta / (s_i^2 + eta^2); peaked at scale s_min,
    // so integrate [0, s_min] and [s_min, T] separately.
    auto im_tr_g = [&f](double eta) {
        double sum = 0.0;
        for (double si : f.s) sum += 2.0 * eta / (si * si + eta * eta);
        return sum;
    };
    const double split = std::min(smin, t_cut);
    QuadResult q1 = integrate(im_tr_g, 0.0, split, 1e-11, 1e-12);
    QuadResult q2 = integrate(im_tr_g, split, t_cut, 1e-11, 1e-12);

    const double lhs = f.logdet();
    const double rhs = f.logdet_shifted(t_cut) - (q1.value + q2.value);
    return std::abs(lhs - rhs);
}

GirkoResult girko_check(const ComplexMatrix& a, const std::function<double(cx)>& f, cx center,
                        double half_width, std::size_t grid_n) {
    if (grid_n < 8) throw InvalidInput("girko_check: grid too small");
    GirkoResult res;

    const SpectrumResult spec = eigenvalues_complex(a);
    for (const cx& lam : spec.eigenvalues) res.lhs += f(lam);

    const double h = 2.0 * half_width / static_cast<double>(grid_n - 1);
    const double x0 = center.real() - half_width;
    const double y0 = center.imag() - half_width;

    for (const cx& lam : spec.eigenvalues) {
        const double dx = std::min(lam.real() - x0, x0 + 2.0 * half_width - lam.real());
        const double dy = std::min(lam.imag() - y0, y0 + 2.0 * half_width - lam.imag());
        if (dx < 2.0 * h || dy < 2.0 * h) res.boundary_warning = true;
    }

    // cache f on the grid, then 5-point Laplacian against log|det Herm_z|
    std::vector<double> fv(grid_n * grid_n);
    for (std::size_t iy = 0; iy < grid_n; ++iy)
        for (std::size_t ix = 0; ix < grid_n; ++ix)
            fv[ix + grid_n * iy] = f(cx(x0 + h * ix, y0 + h * iy));

    const std::size_t last = grid_n - 1;
    std::vector<double> row_sums(grid_n, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::size_t iy = 1; iy < last; ++iy) {
        double acc = 0.0;
        for (std::size_t ix = 1; ix < last; ++ix) {
            const double lap = (fv[ix + 1 + grid_n * iy] + fv[ix - 1 + grid_n * iy] +
                                fv[ix + grid_n * (iy + 1)] + fv[ix + grid_n * (iy - 1)] -
                                4.0 * fv[ix + grid_n * iy]);
            if (lap == 0.0) continue;
            const cx zz(x0 + h * ix, y0 + h * iy);
            ComplexMatrix shifted(a);
            shifted.shift_diagonal(zz);
            const SvdResult sv = svd_via_hermitisation(shifted);
            double logdet = 0.0;
            for (double si : sv.singular_values) logdet += std::log(si * si);
            acc += lap * logdet;
        }
        row_sums[iy] = acc;
    }
    double rhs = 0.0;
    for (double r : row_sums) rhs += r;
    // lap already carries h^2 * Laplacian, so only the measure h^2/h^2 * h^2
    // remains: sum * (1/4pi) with the two h^2 factors cancelling to one.
    res.rhs = rhs / (4.0 * M_PI);
    res.residual = std::abs(res.lhs - res.rhs);
    return res;
}

MinorResolventResult minor_resolvent_check(const ComplexMatrix& a, const ComplexMatrix& u_k) {
    if (!a.square()) throw InvalidInput("minor_resolvent_check: matrix must be square");
    const std::size_t n = a.rows();
    const std::size_t k = u_k.cols();
    if (u_k.rows() != n || k == 0 || k >= n)
        throw InvalidInput("minor_resolvent_check: frame shape invalid");

    // complete U_k to a unitary via Gram-Schmidt over coordinate seeds
    ComplexMatrix u(n, n);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < n; ++i) u(i, j) = u_k(i, j);
    std::size_t filled = k;
    for (std::size_t seed = 0; seed < n && filled < n; ++seed) {
        CVec cand(n, cx(0.0));
        cand[seed] = 1.0;
        for (std::size_t j = 0; j < filled; ++j) {
            cx s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += std::conj(u(i, j)) * cand[i];
            for (std::size_t i = 0; i < n; ++i) cand[i] -= s * u(i, j);
        }
        const double nn = vec_norm(cand);
        if (nn < 1e-8) continue;
        for (std::size_t i = 0; i < n; ++i) u(i, filled) = cand[i] / nn;
        ++filled;
    }
    if (filled < n) throw InvalidInput("minor_resolvent_check: could not complete the frame");

    const ComplexMatrix ainv = inverse(a);
    const ComplexMatrix u_rest = u.block(0, k, n, n - k);
    const ComplexMatrix b = gemm(gemm(u_rest, a, Op::Adjoint, Op::None), u_rest);
    const ComplexMatrix binv = inverse(b);

    // lhs = U [[0,0],[0,B^{-1}]] U*
    ComplexMatrix mid(n, n);
    for (std::size_t j = 0; j < n - k; ++j)
        for (std::size_t i = 0; i < n - k; ++i) mid(k + i, k + j) = binv(i, j);
    const ComplexMatrix lhs = gemm(gemm(u, mid), u, Op::None, Op::Adjoint);

    // rhs = A^{-1} - A^{-1}U_k (U_k* A^{-1} U_k)^{-1} U_k* A^{-1}
    const ComplexMatrix ainv_uk = gemm(ainv, u_k);
    const ComplexMatrix uk_ainv = gemm(u_k, ainv, Op::Adjoint, Op::None);
    const ComplexMatrix core = gemm(u_k, ainv_uk, Op::Adjoint, Op::None);
    LuFactorization core_lu = lu_factor(core); // throws SingularMatrix if degenerate
    const ComplexMatrix core_inv = lu_solve(core_lu, ComplexMatrix::identity(k));
    const ComplexMatrix correction = gemm(gemm(ainv_uk, core_inv), uk_ainv);
    const ComplexMatrix rhs = ainv - correction;

    MinorResolventResult res;
    res.identity_residual = (lhs - rhs).norm_max();
    res.correction_norm = operator_norm(correction);

    // norm bound branch: Re A > 0 (or Im A > 0)
    ComplexMatrix re_a(n, n), im_a(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            re_a(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
            im_a(i, j) = cx(0.0, -0.5) * (a(i, j) - std::conj(a(j, i)));
        }
    const EighResult re_eig = eigh(re_a, false);
    const EighResult im_eig = eigh(im_a, false);
    if (re_eig.eigenvalues.front() > 0.0) {
        res.norm_bound_applicable = true;
        res.bound = 1.0 / re_eig.eigenvalues.front();
    } else if (im_eig.eigenvalues.front() > 0.0) {
        res.norm_bound_applicable = true;
        res.bound = 1.0 / im_eig.eigenvalues.front();
    }
    if (res.norm_bound_applicable)
        res.norm_bound_holds = res.correction_norm <= res.bound * (1.0 + 1e-10);
    return res;
}

} // namespace rmt
