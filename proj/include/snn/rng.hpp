#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace snn {

/// Philox 4x32-10 counter-based generator (Salmon et al., "Parallel random
/// numbers: as easy as 1, 2, 3"). Stateless: output is a pure function of
/// (counter, key), which is what makes per-neuron streams reproducible for
/// any thread count.
struct philox4x32 {
    static constexpr std::uint32_t M0 = 0xD2511F53u;
    static constexpr std::uint32_t M1 = 0xCD9E8D57u;
    static constexpr std::uint32_t W0 = 0x9E3779B9u;
    static constexpr std::uint32_t W1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += W0;
                key[1] += W1;
            }
            std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
            std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
            std::array<std::uint32_t, 4> next = {
                static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                static_cast<std::uint32_t>(p0),
            };
            ctr = next;
        }
        return ctr;
    }
};

/// Role tags keeping logically distinct draws on disjoint streams.
enum class rng_use : std::uint32_t {
    particle_init = 1,
    particle_spike = 2,
    thinning = 3,
    neuron_pick = 4,
    scratch = 5,
};

/// Convert a 64-bit word to a uniform double in (0,1].
inline double u64_to_unit(std::uint64_t x) {
    return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

/// Convert a 32-bit word to a uniform double in (0,1).
inline double u32_to_unit(std::uint32_t x) {
    return (static_cast<double>(x) + 0.5) * 0x1.0p-32;
}

/// One logical stream of random draws, addressed by a 64-bit counter.
/// Identified by (seed, use, id); e.g. id = neuron index.
class rng_stream {
public:
    rng_stream(std::uint64_t seed, rng_use use, std::uint64_t id)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          prefix_{static_cast<std::uint32_t>(id),
                  static_cast<std::uint32_t>(id >> 32) ^
                      (static_cast<std::uint32_t>(use) << 24)} {}

    std::array<std::uint32_t, 4> block(std::uint64_t counter) const {
        return philox4x32::block({static_cast<std::uint32_t>(counter),
                                  static_cast<std::uint32_t>(counter >> 32),
                                  prefix_[0], prefix_[1]},
                                 key_);
    }

    /// Uniform in (0,1], 53-bit resolution.
    double uniform(std::uint64_t counter) const {
        auto b = block(counter);
        return u64_to_unit(join(b[0], b[1]));
    }

    /// Two independent uniforms in (0,1] from one block.
    std::pair<double, double> uniform2(std::uint64_t counter) const {
        auto b = block(counter);
        return {u64_to_unit(join(b[0], b[1])), u64_to_unit(join(b[2], b[3]))};
    }

    /// Two independent standard normals (Box-Muller) from one block.
    std::pair<double, double> normal2(std::uint64_t counter) const {
        auto [u1, u2] = uniform2(counter);
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

    /// Exponential waiting time with the given rate.
    double exponential(std::uint64_t counter, double rate) const {
        return -std::log(uniform(counter)) / rate;
    }

private:
    static std::uint64_t join(std::uint32_t hi, std::uint32_t lo) {
        return (static_cast<std::uint64_t>(hi) << 32) | lo;
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 2> prefix_;
};

} // namespace snn
