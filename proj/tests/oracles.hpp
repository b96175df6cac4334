// Test-only oracles, independent of the library paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "rmt/complex_matrix.hpp"
#include "rmt/rng.hpp"

namespace oracle {

using rmt::ComplexMatrix;
using rmt::cx;
using rmt::CVec;

// Characteristic polynomial coefficients by Faddeev-LeVerrier (trace
// recursion): p(x) = x^n + c[1] x^{n-1} + ... + c[n].
inline CVec char_poly(const ComplexMatrix& a) {
    const std::size_t n = a.rows();
    CVec c(n + 1, cx(0.0));
    c[0] = 1.0;
    ComplexMatrix m(n, n); // M_0 = 0
    for (std::size_t k = 1; k <= n; ++k) {
        // M_k = A M_{k-1} + c_{k-1} I
        ComplexMatrix am = a * m;
        for (std::size_t i = 0; i < n; ++i) am(i, i) += c[k - 1];
        m = std::move(am);
        cx tr = 0.0;
        ComplexMatrix prod = a * m;
        for (std::size_t i = 0; i < n; ++i) tr += prod(i, i);
        c[k] = -tr / static_cast<double>(k);
    }
    return c;
}

// Aberth-Ehrlich simultaneous root iteration for a monic polynomial given by
// char_poly coefficients.
inline CVec poly_roots(const CVec& coeffs, std::size_t max_iter = 200) {
    const std::size_t n = coeffs.size() - 1;
    if (n == 0) return {};
    auto eval = [&](cx x, cx& deriv) {
        cx p = coeffs[0], d = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            d = d * x + p;
            p = p * x + coeffs[i];
        }
        deriv = d;
        return p;
    };
    // initial guesses on a circle of the root-magnitude bound
    double bound = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
        bound = std::max(bound, std::pow(std::abs(coeffs[i]), 1.0 / static_cast<double>(i)));
    bound = 2.0 * bound + 1e-8;
    CVec roots(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ang = 2.0 * M_PI * (static_cast<double>(i) + 0.35) / static_cast<double>(n);
        roots[i] = bound * cx(std::cos(ang), std::sin(ang));
    }
    for (std::size_t it = 0; it < max_iter; ++it) {
        double move = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cx deriv;
            const cx p = eval(roots[i], deriv);
            if (std::abs(p) < 1e-300) continue;
            cx corr = deriv / p;
            cx repulse = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) repulse += 1.0 / (roots[i] - roots[j]);
            const cx denom = corr - repulse;
            if (std::abs(denom) < 1e-300) continue;
            const cx step = 1.0 / denom;
            roots[i] -= step;
            move = std::max(move, std::abs(step));
        }
        if (move < 1e-14 * (1.0 + bound)) break;
    }
    return roots;
}

// Greedy multiset match; returns the largest pairing distance.
inline double multiset_distance(CVec a, CVec b) {
    if (a.size() != b.size()) return 1e300;
    double worst = 0.0;
    for (const cx& x : a) {
        double best = 1e300;
        std::size_t arg = 0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double d = std::abs(x - b[j]);
            if (d < best) {
                best = d;
                arg = j;
            }
        }
        worst = std::max(worst, best);
        b.erase(b.begin() + arg);
    }
    return worst;
}

inline ComplexMatrix random_matrix(rmt::Rng& rng, std::size_t n, double scale = 1.0) {
    ComplexMatrix a(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) a(i, j) = scale * rng.gaussian();
    return a;
}

inline ComplexMatrix random_hermitian(rmt::Rng& rng, std::size_t n, double scale = 1.0) {
    const ComplexMatrix a = random_matrix(rng, n, scale);
    ComplexMatrix h(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) h(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
    return h;
}

} // namespace oracle
