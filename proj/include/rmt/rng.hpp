#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

namespace rmt {

// Philox4x32-10 counter-based generator. A stream is addressed by
// (master_seed, sample_index, stream_id); draws within a stream advance an
// internal counter. Output is independent of thread scheduling because every
// (sample, stream) pair owns its own counter space.
class Rng {
public:
    Rng(std::uint64_t master_seed, std::uint64_t sample_index = 0, std::uint64_t stream_id = 0)
        : key0_(static_cast<std::uint32_t>(master_seed)),
          key1_(static_cast<std::uint32_t>(master_seed >> 32)),
          ctr2_(static_cast<std::uint32_t>(sample_index)),
          ctr3_(static_cast<std::uint32_t>((sample_index >> 32) ^ (stream_id << 8) ^ stream_id)) {
        // fold stream id into the key as well so streams differ even when the
        // high counter word collides
        key0_ ^= static_cast<std::uint32_t>(stream_id * 0x9E3779B9u);
        key1_ ^= static_cast<std::uint32_t>((stream_id >> 32) * 0xBB67AE85u + 0x1000193u);
    }

    std::uint32_t next_u32() {
        if (lane_ == 4) {
            block();
            lane_ = 0;
        }
        return out_[lane_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // Uniform in (0,1]: never returns 0, safe for logs.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
    }

    // Standard complex Gaussian: E z = 0, E|z|^2 = 1 (re, im ~ N(0,1/2)).
    std::complex<double> gaussian() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-std::log(u1));
        return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
    }

    // Real standard normal via Box-Muller (one value per pair, the partner
    // is discarded to keep the stream layout simple).
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Uniform point on the unit sphere of C^n.
    std::vector<std::complex<double>> sphere_point(std::size_t n) {
        std::vector<std::complex<double>> v(n);
        double s = 0.0;
        for (auto& z : v) {
            z = gaussian();
            s += std::norm(z);
        }
        const double inv = 1.0 / std::sqrt(s);
        for (auto& z : v) z *= inv;
        return v;
    }

    double sign() { return (next_u32() & 1u) ? 1.0 : -1.0; }

private:
    void block() {
        std::uint32_t c0 = ctr0_, c1 = ctr1_, c2 = ctr2_, c3 = ctr3_;
        std::uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = 0xD2511F53ull * c0;
            const std::uint64_t p1 = 0xCD9E8D57ull * c2;
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            const std::uint32_t n0 = hi1 ^ c1 ^ k0;
            const std::uint32_t n1 = lo1;
            const std::uint32_t n2 = hi0 ^ c3 ^ k1;
            const std::uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        out_[0] = c0; out_[1] = c1; out_[2] = c2; out_[3] = c3;
        if (++ctr0_ == 0) ++ctr1_;
    }

    std::uint32_t key0_, key1_;
    std::uint32_t ctr0_ = 0, ctr1_ = 0, ctr2_, ctr3_;
    std::uint32_t out_[4] = {0, 0, 0, 0};
    int lane_ = 4;
};

} // namespace rmt
