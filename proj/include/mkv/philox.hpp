#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace mkv {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is a
// pure function of (counter, key), which is what makes increments
// independent of query order and thread count.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static constexpr Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

// Uniform in the open interval (0, 1) from 64 random bits.
inline double open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

// Two independent standard normals from one Philox block (Box-Muller).
inline std::pair<double, double> normal_pair(const Philox4x32::Counter& out) noexcept {
    const double u1 = open_unit((std::uint64_t{out[0]} << 32) | out[1]);
    const double u2 = open_unit((std::uint64_t{out[2]} << 32) | out[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(angle), r * std::sin(angle)};
}

inline Philox4x32::Key key_from_seed(std::uint64_t seed) noexcept {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

// Sequential stream of standard normals keyed by (seed, stream id, domain).
// Used for initial conditions and checker sampling; Brownian increments are
// drawn directly from NoiseDriver keys instead.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint32_t stream, std::uint32_t domain) noexcept
        : key_(key_from_seed(seed)), stream_(stream), domain_(domain) {}

    double next() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(counter_),
                                      static_cast<std::uint32_t>(counter_ >> 32), stream_,
                                      domain_};
        ++counter_;
        auto [z0, z1] = normal_pair(Philox4x32::block(ctr, key_));
        spare_ = z1;
        has_spare_ = true;
        return z0;
    }

    double uniform() noexcept {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(counter_),
                                      static_cast<std::uint32_t>(counter_ >> 32), stream_,
                                      domain_ | 0x80000000u};
        ++counter_;
        const auto out = Philox4x32::block(ctr, key_);
        return open_unit((std::uint64_t{out[0]} << 32) | out[1]);
    }

private:
    Philox4x32::Key key_;
    std::uint32_t stream_;
    std::uint32_t domain_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Domain tags keep the stream families disjoint.
namespace domain {
inline constexpr std::uint32_t kBrownian = 0;
inline constexpr std::uint32_t kInitial = 1u << 24;
inline constexpr std::uint32_t kChecker = 2u << 24;
}  // namespace domain

}  // namespace mkv
