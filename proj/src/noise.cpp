#include "mkv/noise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mkv/error.hpp"
#include "mkv/kernels.hpp"
#include "mkv/philox.hpp"

namespace mkv {

NoiseDriver::NoiseDriver(std::uint64_t seed, std::size_t particles, std::size_t m, std::size_t m0)
    : seed_(seed), particles_(particles), m_(m), m0_(m0) {
    if (particles_ == 0) throw InvalidArgument("noise driver: need at least one particle");
    if (particles_ >= 0xFFFFFFFFu) throw InvalidArgument("noise driver: too many particles");
    if (m_ >= (1u << 24) || m0_ >= (1u << 24)) {
        throw InvalidArgument("noise driver: noise dimension too large");
    }
}

double NoiseDriver::standard_normal(PathId path, std::size_t coord,
                                    std::uint64_t ordinal) const noexcept {
    const Philox4x32::Counter ctr{
        static_cast<std::uint32_t>(ordinal), static_cast<std::uint32_t>(ordinal >> 32),
        path.code(), domain::kBrownian | static_cast<std::uint32_t>(coord >> 1)};
    const auto [z0, z1] = normal_pair(Philox4x32::block(ctr, key_from_seed(seed_)));
    return (coord & 1u) ? z1 : z0;
}

CoupledGridSession::CoupledGridSession(NoiseDriver driver, std::size_t consumers, double t0)
    : driver_(driver), breakpoints_{t0} {
    if (consumers == 0) throw InvalidArgument("coupled session: need at least one consumer");
    if (!std::isfinite(t0)) throw InvalidArgument("coupled session: start time must be finite");
    last_.assign(consumers, std::vector<double>(driver_.particles() + 1, t0));
}

void CoupledGridSession::materialize(double t) {
    if (!std::isfinite(t)) throw InvalidArgument("coupled session: non-finite breakpoint");
    if (t > clock()) {
        breakpoints_.push_back(t);
        return;
    }
    if (!std::binary_search(breakpoints_.begin(), breakpoints_.end(), t)) {
        throw CouplingConflict(
            "coupled session: time " + std::to_string(t) +
            " falls inside an already realised interval; advance consumers in lockstep");
    }
}

std::size_t CoupledGridSession::ordinal_of(double t) {
    materialize(t);
    return static_cast<std::size_t>(
        std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t) - breakpoints_.begin());
}

void CoupledGridSession::check_from(std::size_t consumer, std::size_t path_slot, double from) const {
    if (from < last_[consumer][path_slot]) {
        throw NonMonotoneQuery("coupled session: consumer " + std::to_string(consumer) +
                               " queried from t = " + std::to_string(from) +
                               " before its last consumed time " +
                               std::to_string(last_[consumer][path_slot]));
    }
}

std::vector<double> CoupledGridSession::increment(std::size_t consumer, PathId path, double from,
                                                  double to) {
    if (consumer >= consumers()) throw InvalidArgument("coupled session: unknown consumer");
    if (!path.is_common() && path.particle_index() >= driver_.particles()) {
        throw InvalidArgument("coupled session: particle index out of range");
    }
    if (!(from < to)) throw InvalidArgument("coupled session: increment needs from < to");
    check_from(consumer, path.code(), from);
    const std::size_t k0 = ordinal_of(from);
    const std::size_t k1 = ordinal_of(to);
    std::vector<double> out(driver_.dim(path));
    for (std::size_t c = 0; c < out.size(); ++c) {
        out[c] = kernels::detail::brownian_sum(driver_, breakpoints_, k0, k1, path, c);
    }
    last_[consumer][path.code()] = to;
    return out;
}

void CoupledGridSession::draw(std::size_t consumer, double from, double to,
                              std::span<double> particle_out, std::span<double> common_out,
                              const Exec& exec) {
    if (consumer >= consumers()) throw InvalidArgument("coupled session: unknown consumer");
    if (!(from < to)) throw InvalidArgument("coupled session: increment needs from < to");
    const std::size_t m = driver_.m();
    if (particle_out.size() % m != 0 || particle_out.size() / m > driver_.particles() ||
        common_out.size() != driver_.m0()) {
        throw InvalidArgument("coupled session: output buffers have the wrong size");
    }
    // Paths 0 (common) .. k (particles 0..k-1) are consumed.
    const std::size_t slots = particle_out.size() / m + 1;
    auto& last = last_[consumer];
    for (std::size_t slot = 0; slot < slots; ++slot) check_from(consumer, slot, from);
    const std::size_t k0 = ordinal_of(from);
    const std::size_t k1 = ordinal_of(to);
    kernels::brownian_sums(driver_, breakpoints_, k0, k1, particle_out, exec);
    for (std::size_t c = 0; c < common_out.size(); ++c) {
        common_out[c] =
            kernels::detail::brownian_sum(driver_, breakpoints_, k0, k1, PathId::common(), c);
    }
    std::fill(last.begin(), last.begin() + static_cast<std::ptrdiff_t>(slots), to);
}

LockstepDecision lockstep_advance(double fine_next, double coarse_next) noexcept {
    const double t = std::min(fine_next, coarse_next);
    return {t, fine_next == t, coarse_next == t};
}

}  // namespace mkv
