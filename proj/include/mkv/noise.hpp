#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mkv/exec.hpp"

namespace mkv {

// Identifies one Brownian path of a driver: the shared common path W^0 or the
// idiosyncratic path W^i of particle i.
class PathId {
public:
    static constexpr PathId common() noexcept { return PathId{0}; }
    static constexpr PathId particle(std::size_t i) noexcept {
        return PathId{static_cast<std::uint32_t>(i + 1)};
    }

    constexpr bool is_common() const noexcept { return code_ == 0; }
    constexpr std::size_t particle_index() const noexcept { return code_ - 1; }
    constexpr std::uint32_t code() const noexcept { return code_; }

    friend constexpr bool operator==(PathId, PathId) = default;

private:
    explicit constexpr PathId(std::uint32_t code) : code_(code) {}
    std::uint32_t code_;
};

// Seeded source of N independent m-dimensional Brownian paths plus one
// m0-dimensional common path. The standard normal attached to
// (path, coordinate, interval ordinal) is a pure function of the seed.
class NoiseDriver {
public:
    NoiseDriver(std::uint64_t seed, std::size_t particles, std::size_t m, std::size_t m0);

    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t particles() const noexcept { return particles_; }
    std::size_t m() const noexcept { return m_; }
    std::size_t m0() const noexcept { return m0_; }
    std::size_t dim(PathId path) const noexcept { return path.is_common() ? m0_ : m_; }

    double standard_normal(PathId path, std::size_t coord, std::uint64_t ordinal) const noexcept;

private:
    std::uint64_t seed_;
    std::size_t particles_;
    std::size_t m_;
    std::size_t m0_;
};

// A realised set of breakpoints shared by one or more consumers (e.g. the fine
// and coarse level of a coupled pair). Interval k = [t_k, t_{k+1}] carries the
// increment sqrt(t_{k+1} - t_k) * Z(path, coord, k), so every consumer sees the
// same underlying path and a coarse increment is literally the sum of the
// merged-grid increments it spans.
//
// Queries advance monotonically per (consumer, path). A request may end beyond
// the clock (a new breakpoint is materialised), but an endpoint inside an
// already-realised interval is a CouplingConflict.
class CoupledGridSession {
public:
    explicit CoupledGridSession(NoiseDriver driver, std::size_t consumers = 2, double t0 = 0.0);

    const NoiseDriver& driver() const noexcept { return driver_; }
    std::size_t consumers() const noexcept { return last_.size(); }
    double clock() const noexcept { return breakpoints_.back(); }
    std::span<const double> breakpoints() const noexcept { return breakpoints_; }

    // Extends the merged grid to t (no-op when t is already a breakpoint).
    void materialize(double t);

    // Increment of one path over [from, to] as seen by `consumer`.
    std::vector<double> increment(std::size_t consumer, PathId path, double from, double to);

    // Increments of the first k particle paths (row-major k x m, k taken from
    // the buffer size, k <= N) and the common path (m0) over [from, to];
    // equivalent to k + 1 calls to increment().
    void draw(std::size_t consumer, double from, double to, std::span<double> particle_out,
              std::span<double> common_out, const Exec& exec = {});

private:
    std::size_t ordinal_of(double t);
    void check_from(std::size_t consumer, std::size_t path_slot, double from) const;

    NoiseDriver driver_;
    std::vector<double> breakpoints_;
    // last_[consumer][path code] = last consumed time
    std::vector<std::vector<double>> last_;
};

struct LockstepDecision {
    double time;
    bool fine_steps;
    bool coarse_steps;
};

// Merged-grid scheduling for two systems whose next grid points are known.
LockstepDecision lockstep_advance(double fine_next, double coarse_next) noexcept;

}  // namespace mkv
