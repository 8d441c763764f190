#pragma once

// Counter-based random number generation.  The generator is Philox4x64-10;
// identical (seed, stream_id) pairs produce identical draw sequences on every
// platform, and distinct stream ids are statistically independent.  Parallel
// code derives one stream per unit of work instead of sharing a generator.

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "mibench/special.hpp"

namespace mibench {

namespace detail {

struct Philox4x64 {
    static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

    std::array<std::uint64_t, 2> key{};
    std::array<std::uint64_t, 4> counter{};
    std::array<std::uint64_t, 4> buffer{};
    int buffer_pos = 4;

    static void mul_hi_lo(std::uint64_t a, std::uint64_t b,
                          std::uint64_t& hi, std::uint64_t& lo) {
        const unsigned __int128 p =
            static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
        hi = static_cast<std::uint64_t>(p >> 64);
        lo = static_cast<std::uint64_t>(p);
    }

    static std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 4> ctr,
                                              std::array<std::uint64_t, 2> k) {
        for (int round = 0; round < 10; ++round) {
            std::uint64_t hi0, lo0, hi1, lo1;
            mul_hi_lo(kMul0, ctr[0], hi0, lo0);
            mul_hi_lo(kMul1, ctr[2], hi1, lo1);
            ctr = {hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0};
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        return ctr;
    }

    std::uint64_t next() {
        if (buffer_pos == 4) {
            for (int i = 0; i < 4; ++i) {
                if (++counter[i] != 0) break;
            }
            buffer = block(counter, key);
            buffer_pos = 0;
        }
        return buffer[buffer_pos++];
    }
};

// FNV-1a over a canonical byte encoding of the stream labels.
inline std::uint64_t fnv1a_append(std::uint64_t h, const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace detail

// Derives a 64-bit stream id from (task id, seed index, purpose tag).
inline std::uint64_t derive_stream_id(std::string_view task_id,
                                      std::uint64_t seed_index,
                                      std::string_view purpose) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    h = detail::fnv1a_append(h, task_id.data(), task_id.size());
    const unsigned char sep = 0x1F;
    h = detail::fnv1a_append(h, &sep, 1);
    std::uint64_t le = seed_index;
    h = detail::fnv1a_append(h, &le, sizeof(le));
    h = detail::fnv1a_append(h, &sep, 1);
    h = detail::fnv1a_append(h, purpose.data(), purpose.size());
    return h;
}

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id) {
        gen_.key = {seed, stream_id};
    }

    RngStream(std::uint64_t seed, std::string_view task_id,
              std::uint64_t seed_index, std::string_view purpose)
        : RngStream(seed, derive_stream_id(task_id, seed_index, purpose)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() { return gen_.next(); }

    // Uniform on the open interval (0, 1); never returns an endpoint.
    double uniform01() {
        return (static_cast<double>(gen_.next() >> 11) + 0.5) * 0x1p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double standard_normal() { return normal_quantile(uniform01()); }

    // Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("RngStream::below: n must be > 0");
        // Rejection on the top multiple of n keeps the draw unbiased.
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t x;
        do {
            x = gen_.next();
        } while (x >= limit);
        return x % n;
    }

    // Gamma(shape, scale) by Marsaglia-Tsang squeeze; shape < 1 boosted.
    double gamma(double shape, double scale) {
        if (!(shape > 0.0) || !(scale > 0.0)) {
            throw std::invalid_argument("RngStream::gamma: shape and scale must be > 0");
        }
        if (shape < 1.0) {
            const double u = uniform01();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = standard_normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = uniform01();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v * scale;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

    double chi_square(int dof) {
        if (dof < 1) throw std::invalid_argument("RngStream::chi_square: dof >= 1");
        return gamma(0.5 * dof, 2.0);
    }

    void fill_standard_normal(double* out, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) out[i] = standard_normal();
    }

    std::vector<double> standard_normal_vec(std::size_t n) {
        std::vector<double> v(n);
        fill_standard_normal(v.data(), n);
        return v;
    }

    // Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        for (std::size_t i = n; i > 1; --i) {
            std::swap(p[i - 1], p[below(i)]);
        }
        return p;
    }

    // Sattolo cycle: a uniform single-cycle permutation, hence no fixed
    // points.  Used for in-batch negative pairing.
    std::vector<std::size_t> derangement(std::size_t n) {
        if (n < 2) throw std::invalid_argument("RngStream::derangement: n >= 2");
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        for (std::size_t i = n - 1; i > 0; --i) {
            std::swap(p[i], p[below(i)]);
        }
        return p;
    }

private:
    detail::Philox4x64 gen_;
    std::uint64_t seed_;
    std::uint64_t stream_id_;
};

}  // namespace mibench
