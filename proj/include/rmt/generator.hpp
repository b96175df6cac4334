#pragma once

#include <cmath>
#include <string>

#include "rmt/complex_matrix.hpp"
#include "rmt/rng.hpp"

namespace rmt {

// Matrix ensemble generators. Ginibre draws iid complex Gaussian entries of
// variance 1/N (independent real/imaginary parts); Bernoulli draws
// (s1 + i s2)/sqrt(2N) with independent signs, also variance 1/N.
struct MatrixGenerator {
    enum class Kind { Ginibre, Bernoulli, Zero, Fixed };

    Kind kind = Kind::Ginibre;
    std::size_t n = 0;
    ComplexMatrix fixed;

    static MatrixGenerator ginibre(std::size_t n) { return {Kind::Ginibre, n, {}}; }
    static MatrixGenerator bernoulli(std::size_t n) { return {Kind::Bernoulli, n, {}}; }
    static MatrixGenerator zero(std::size_t n) { return {Kind::Zero, n, {}}; }
    static MatrixGenerator from_matrix(ComplexMatrix m) {
        MatrixGenerator g{Kind::Fixed, m.rows(), std::move(m)};
        return g;
    }

    ComplexMatrix draw(Rng& rng) const {
        switch (kind) {
            case Kind::Fixed:
                return fixed;
            case Kind::Zero:
                return ComplexMatrix(n, n);
            case Kind::Bernoulli: {
                ComplexMatrix a(n, n);
                const double scale = 1.0 / std::sqrt(2.0 * static_cast<double>(n));
                for (std::size_t j = 0; j < n; ++j)
                    for (std::size_t i = 0; i < n; ++i)
                        a(i, j) = scale * cx(rng.sign(), rng.sign());
                return a;
            }
            case Kind::Ginibre:
            default: {
                ComplexMatrix a(n, n);
                const double scale = 1.0 / std::sqrt(static_cast<double>(n));
                for (std::size_t j = 0; j < n; ++j)
                    for (std::size_t i = 0; i < n; ++i) a(i, j) = scale * rng.gaussian();
                return a;
            }
        }
    }

    std::string id() const {
        switch (kind) {
            case Kind::Fixed: return "fixed";
            case Kind::Zero: return "zero";
            case Kind::Bernoulli: return "bernoulli";
            case Kind::Ginibre: default: return "ginibre";
        }
    }
};

// Stream ids for the counter-based generator; keeps every consumer of
// randomness on its own independent stream per sample.
namespace streams {
constexpr std::uint64_t kMatrixA = 1;
constexpr std::uint64_t kMatrixB = 2;
constexpr std::uint64_t kSphere = 3;
constexpr std::uint64_t kGauss = 4;
constexpr std::uint64_t kMisc = 5;
} // namespace streams

} // namespace rmt
