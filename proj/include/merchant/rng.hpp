#pragma once

#include <cmath>
#include <cstdint>

namespace merchant {

// SplitMix64 step (Vigna's fixed-increment variant of Java's
// SplittableRandom). One 64-bit word of state, full period 2^64.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Stateless (seed, index) -> stream-state derivation. Trial streams are
// mutually independent and do not depend on worker count or scheduling.
inline std::uint64_t derive_stream_state(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed ^ 0x6A09E667F3BCC909ULL;  // avoid the all-zero fixed point
    std::uint64_t a = splitmix64_next(s);
    s = a + index * 0x9E3779B97F4A7C15ULL;
    return splitmix64_next(s);
}

// Per-trial random stream: uniforms in (0,1) and standard normals.
class RngStream {
public:
    explicit RngStream(std::uint64_t state) : state_(state) {}

    RngStream(std::uint64_t seed, std::uint64_t trial_index)
        : state_(derive_stream_state(seed, trial_index)) {}

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    // Uniform on (0,1); 53 mantissa bits, zero excluded.
    double next_unit() {
        for (;;) {
            double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
            if (u > 0.0) return u;
        }
    }

    // Standard normal via the Marsaglia polar method; the spare value is
    // cached so draws come in deterministic order within the stream.
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_unit() - 1.0;
            v = 2.0 * next_unit() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    // Normal with the given variance.
    double next_normal_var(double variance) {
        return next_normal() * std::sqrt(variance);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace merchant
