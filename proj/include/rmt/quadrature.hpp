#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace rmt {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t evaluations = 0;
};

struct QuadResultC {
    std::complex<double> value{0.0, 0.0};
    double error = 0.0;
    std::size_t evaluations = 0;
};

// Adaptive Gauss-Kronrod (G7, K15) with recursive bisection.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol = 1e-12, double rel_tol = 1e-12, int max_depth = 40);

QuadResultC integrate_complex(const std::function<std::complex<double>(double)>& f, double a,
                              double b, double abs_tol = 1e-12, double rel_tol = 1e-12,
                              int max_depth = 40);

// Gauss-Hermite rule for weight e^{-x^2} on the real line (Golub-Welsch).
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussHermite gauss_hermite(std::size_t n);

// Regularized incomplete gamma P(a, x) and the chi-square upper tail, used
// for the goodness-of-fit summaries.
double gamma_p(double a, double x);
double chi_square_tail(double chi2, double dof);

} // namespace rmt
