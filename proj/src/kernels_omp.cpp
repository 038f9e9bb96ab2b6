#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>

#include "mkv/error.hpp"
#include "mkv/kernels.hpp"

namespace mkv::kernels::omp {

namespace {

int resolve(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

std::size_t block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }

}  // namespace

int max_threads() { return omp_get_max_threads(); }

Moments moments(std::span<const double> points, std::size_t dim, int threads) {
    const std::size_t n = points.size() / dim;
    const std::size_t blocks = block_count(n);
    std::vector<double> partial_mean(blocks * dim, 0.0);
    std::vector<double> partial_sq(blocks, 0.0);
    const auto nblocks = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static) num_threads(resolve(threads))
    for (std::ptrdiff_t blk = 0; blk < nblocks; ++blk) {
        const std::size_t start = static_cast<std::size_t>(blk) * kBlock;
        const std::size_t stop = std::min(n, start + kBlock);
        double* mean = partial_mean.data() + static_cast<std::size_t>(blk) * dim;
        double sq = 0.0;
        for (std::size_t j = start; j < stop; ++j) {
            for (std::size_t k = 0; k < dim; ++k) {
                const double v = points[j * dim + k];
                mean[k] += v;
                sq += v * v;
            }
        }
        partial_sq[static_cast<std::size_t>(blk)] = sq;
    }
    Moments out;
    out.mean.assign(dim, 0.0);
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        for (std::size_t k = 0; k < dim; ++k) out.mean[k] += partial_mean[blk * dim + k];
        out.second_moment += partial_sq[blk];
    }
    for (double& v : out.mean) v /= static_cast<double>(n);
    out.second_moment /= static_cast<double>(n);
    return out;
}

double abs_moment(std::span<const double> points, std::size_t dim, double p, int threads) {
    const std::size_t n = points.size() / dim;
    const std::size_t blocks = block_count(n);
    std::vector<double> partial(blocks, 0.0);
    const auto nblocks = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static) num_threads(resolve(threads))
    for (std::ptrdiff_t blk = 0; blk < nblocks; ++blk) {
        const std::size_t start = static_cast<std::size_t>(blk) * kBlock;
        const std::size_t stop = std::min(n, start + kBlock);
        double block = 0.0;
        for (std::size_t j = start; j < stop; ++j) {
            block += std::pow(euclidean_norm(points.subspan(j * dim, dim)), p);
        }
        partial[static_cast<std::size_t>(blk)] = block;
    }
    double total = 0.0;
    for (double v : partial) total += v;
    return total / static_cast<double>(n);
}

std::size_t find_nonfinite(std::span<const double> values, int threads) {
    std::size_t first = npos;
    const auto n = static_cast<std::ptrdiff_t>(values.size());
#pragma omp parallel for schedule(static) reduction(min : first) num_threads(resolve(threads))
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (!std::isfinite(values[static_cast<std::size_t>(i)])) {
            first = std::min(first, static_cast<std::size_t>(i));
        }
    }
    return first;
}

MinStep min_step(std::span<const double> states, std::size_t dim, const EmpiricalMeasure& mu,
                 const TimestepPolicy& policy, int threads) {
    const std::size_t n = states.size() / dim;
    std::vector<double> steps(n);
    std::size_t first_bad = npos;
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) reduction(min : first_bad) num_threads(resolve(threads))
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            steps[idx] = clamp_step(policy, states.subspan(idx * dim, dim), mu);
        } catch (...) {
            first_bad = std::min(first_bad, idx);
        }
    }
    if (first_bad != npos) {
        // Re-run serially on the failing particle to rethrow with its witness.
        try {
            clamp_step(policy, states.subspan(first_bad * dim, dim), mu);
        } catch (const NumericalBlowup& e) {
            throw NumericalBlowup(e.what(), first_bad, 0.0, e.state());
        }
    }
    MinStep best;
    for (std::size_t i = 0; i < n; ++i) {
        if (steps[i] < best.h) {
            best.h = steps[i];
            best.argmin = i;
        }
    }
    return best;
}

std::size_t em_update(std::span<double> states, const ModelSpec& model, const EmpiricalMeasure& mu,
                      double h, std::span<const double> dW, std::span<const double> dW0,
                      DriftForm drift, int threads) {
    const std::size_t d = model.d, m = model.m;
    const std::size_t n = states.size() / d;
    const std::size_t scratch_size = d + d * m + d * model.m0;
    std::size_t first_bad = npos;
    std::exception_ptr failure;
#pragma omp parallel num_threads(resolve(threads)) reduction(min : first_bad)
    {
        std::vector<double> scratch(scratch_size);
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            const auto idx = static_cast<std::size_t>(i);
            try {
                const bool ok = detail::update_particle(states.subspan(idx * d, d), model, mu, h,
                                                        dW.subspan(idx * m, m), dW0, drift, scratch);
                if (!ok) first_bad = std::min(first_bad, idx);
            } catch (...) {
#pragma omp critical(mkv_em_update_failure)
                if (!failure) failure = std::current_exception();
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
    return first_bad;
}

void brownian_sums(const NoiseDriver& driver, std::span<const double> breakpoints,
                   std::size_t k_begin, std::size_t k_end, std::span<double> out, int threads) {
    const std::size_t m = driver.m();
    const auto n = static_cast<std::ptrdiff_t>(out.size() / m);
#pragma omp parallel for schedule(static) num_threads(resolve(threads))
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        for (std::size_t c = 0; c < m; ++c) {
            out[idx * m + c] = detail::brownian_sum(driver, breakpoints, k_begin, k_end,
                                                    PathId::particle(idx), c);
        }
    }
}

}  // namespace mkv::kernels::omp
