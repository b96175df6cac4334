#include "rmt/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include "rmt/complex_matrix.hpp"
#include "rmt/errors.hpp"
#include "rmt/linalg.hpp"

namespace rmt {

namespace {

// Kronrod 15-point nodes/weights on [-1,1] with the embedded Gauss-7 rule.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename T>
struct Panel {
    T integral;
    double error;
};

template <typename T, typename F>
Panel<T> gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    T fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kXgk[i]);
        fv[14 - i] = f(c + h * kXgk[i]);
    }
    fv[7] = f(c);

    T resk = kWgk[7] * fv[7];
    T resg = kWg[3] * fv[7];
    for (int i = 0; i < 7; ++i) resk += kWgk[i] * (fv[i] + fv[14 - i]);
    for (int i = 0; i < 3; ++i) resg += kWg[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);

    Panel<T> p;
    p.integral = resk * h;
    p.error = std::abs(resk - resg) * h;
    return p;
}

template <typename T, typename F>
T adaptive(const F& f, double a, double b, double abs_tol, double rel_tol, int max_depth,
           double& err_out, std::size_t& evals) {
    struct Seg {
        double a, b;
        Panel<T> p;
        int depth;
    };
    std::vector<Seg> stack;
    Panel<T> whole = gk15<T>(f, a, b);
    evals += 15;
    stack.push_back({a, b, whole, 0});
    T total{};
    double err = 0.0;
    const double scale = std::abs(whole.integral);

    while (!stack.empty()) {
        Seg s = stack.back();
        stack.pop_back();
        const double tol = std::max(abs_tol, rel_tol * std::max(scale, std::abs(s.p.integral)));
        if (s.p.error <= tol * std::max(1.0, (s.b - s.a) / (b - a)) || s.depth >= max_depth) {
            total += s.p.integral;
            err += s.p.error;
            continue;
        }
        const double m = 0.5 * (s.a + s.b);
        Panel<T> left = gk15<T>(f, s.a, m);
        Panel<T> right = gk15<T>(f, m, s.b);
        evals += 30;
        stack.push_back({s.a, m, left, s.depth + 1});
        stack.push_back({m, s.b, right, s.depth + 1});
    }
    err_out = err;
    return total;
}

} // namespace

QuadResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                     double rel_tol, int max_depth) {
    QuadResult r;
    r.value = adaptive<double>(f, a, b, abs_tol, rel_tol, max_depth, r.error, r.evaluations);
    return r;
}

QuadResultC integrate_complex(const std::function<std::complex<double>(double)>& f, double a,
                              double b, double abs_tol, double rel_tol, int max_depth) {
    QuadResultC r;
    r.value = adaptive<std::complex<double>>(f, a, b, abs_tol, rel_tol, max_depth, r.error,
                                             r.evaluations);
    return r;
}

GaussHermite gauss_hermite(std::size_t n) {
    if (n == 0) throw InvalidInput("gauss_hermite: need at least one node");
    // Jacobi matrix for physicists' Hermite polynomials: off-diagonal sqrt(k/2)
    ComplexMatrix j(n, n);
    for (std::size_t k = 1; k < n; ++k) {
        const double b = std::sqrt(0.5 * static_cast<double>(k));
        j(k - 1, k) = b;
        j(k, k - 1) = b;
    }
    EighResult e = eigh(j, true);
    GaussHermite gh;
    gh.nodes.resize(n);
    gh.weights.resize(n);
    const double mu0 = std::sqrt(M_PI); // integral of the weight
    for (std::size_t i = 0; i < n; ++i) {
        gh.nodes[i] = e.eigenvalues[i];
        gh.weights[i] = mu0 * std::norm(e.vectors(0, i));
    }
    return gh;
}

double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw InvalidInput("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) {
        // series
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    // continued fraction for Q, P = 1 - Q
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    const double q = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    return 1.0 - q;
}

double chi_square_tail(double chi2, double dof) {
    if (chi2 <= 0.0) return 1.0;
    return 1.0 - gamma_p(0.5 * dof, 0.5 * chi2);
}

} // namespace rmt
