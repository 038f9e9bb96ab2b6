#include <algorithm>
#include <cmath>

#include "mkv/error.hpp"
#include "mkv/kernels.hpp"

namespace mkv::kernels {

namespace detail {

bool update_particle(std::span<double> x, const ModelSpec& model, const EmpiricalMeasure& mu,
                     double h, std::span<const double> dW, std::span<const double> dW0,
                     DriftForm drift, std::span<double> scratch) {
    const std::size_t d = model.d, m = model.m, m0 = model.m0;
    auto b = scratch.subspan(0, d);
    auto s = scratch.subspan(d, d * m);
    auto s0 = scratch.subspan(d + d * m, d * m0);
    model.drift(x, mu, b);
    model.diffusion(x, mu, s);
    model.common_diffusion(x, mu, s0);
    double drift_scale = h;
    if (drift == DriftForm::tamed) drift_scale = h / (1.0 + h * euclidean_norm(b));
    bool finite = true;
    for (std::size_t r = 0; r < d; ++r) {
        double v = x[r] + b[r] * drift_scale;
        for (std::size_t c = 0; c < m; ++c) v += s[r * m + c] * dW[c];
        for (std::size_t c = 0; c < m0; ++c) v += s0[r * m0 + c] * dW0[c];
        x[r] = v;
        finite = finite && std::isfinite(v);
    }
    return finite;
}

double brownian_sum(const NoiseDriver& driver, std::span<const double> breakpoints,
                    std::size_t k_begin, std::size_t k_end, PathId path, std::size_t coord) {
    double sum = 0.0;
    for (std::size_t k = k_begin; k < k_end; ++k) {
        const double dt = breakpoints[k + 1] - breakpoints[k];
        sum += std::sqrt(dt) * driver.standard_normal(path, coord, k);
    }
    return sum;
}

}  // namespace detail

namespace serial {

Moments moments(std::span<const double> points, std::size_t dim) {
    const std::size_t n = points.size() / dim;
    Moments out;
    out.mean.assign(dim, 0.0);
    std::vector<double> block_mean(dim);
    for (std::size_t start = 0; start < n; start += kBlock) {
        const std::size_t stop = std::min(n, start + kBlock);
        std::fill(block_mean.begin(), block_mean.end(), 0.0);
        double block_sq = 0.0;
        for (std::size_t j = start; j < stop; ++j) {
            for (std::size_t k = 0; k < dim; ++k) {
                const double v = points[j * dim + k];
                block_mean[k] += v;
                block_sq += v * v;
            }
        }
        for (std::size_t k = 0; k < dim; ++k) out.mean[k] += block_mean[k];
        out.second_moment += block_sq;
    }
    for (double& v : out.mean) v /= static_cast<double>(n);
    out.second_moment /= static_cast<double>(n);
    return out;
}

double abs_moment(std::span<const double> points, std::size_t dim, double p) {
    const std::size_t n = points.size() / dim;
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += kBlock) {
        const std::size_t stop = std::min(n, start + kBlock);
        double block = 0.0;
        for (std::size_t j = start; j < stop; ++j) {
            block += std::pow(euclidean_norm(points.subspan(j * dim, dim)), p);
        }
        total += block;
    }
    return total / static_cast<double>(n);
}

std::size_t find_nonfinite(std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) return i;
    }
    return npos;
}

MinStep min_step(std::span<const double> states, std::size_t dim, const EmpiricalMeasure& mu,
                 const TimestepPolicy& policy) {
    MinStep best;
    const std::size_t n = states.size() / dim;
    for (std::size_t i = 0; i < n; ++i) {
        double h;
        try {
            h = clamp_step(policy, states.subspan(i * dim, dim), mu);
        } catch (const NumericalBlowup& e) {
            throw NumericalBlowup(e.what(), i, 0.0, e.state());
        }
        if (h < best.h) {
            best.h = h;
            best.argmin = i;
        }
    }
    return best;
}

std::size_t em_update(std::span<double> states, const ModelSpec& model, const EmpiricalMeasure& mu,
                      double h, std::span<const double> dW, std::span<const double> dW0,
                      DriftForm drift) {
    const std::size_t d = model.d, m = model.m;
    const std::size_t n = states.size() / d;
    std::vector<double> scratch(d + d * m + d * model.m0);
    std::size_t first_bad = npos;
    for (std::size_t i = 0; i < n; ++i) {
        const bool ok = detail::update_particle(states.subspan(i * d, d), model, mu, h,
                                                dW.subspan(i * m, m), dW0, drift, scratch);
        if (!ok && first_bad == npos) first_bad = i;
    }
    return first_bad;
}

void brownian_sums(const NoiseDriver& driver, std::span<const double> breakpoints,
                   std::size_t k_begin, std::size_t k_end, std::span<double> out) {
    const std::size_t m = driver.m();
    for (std::size_t i = 0; i < out.size() / m; ++i) {
        for (std::size_t c = 0; c < m; ++c) {
            out[i * m + c] =
                detail::brownian_sum(driver, breakpoints, k_begin, k_end, PathId::particle(i), c);
        }
    }
}

}  // namespace serial

Moments moments(std::span<const double> points, std::size_t dim, const Exec& exec) {
    return exec.backend == Backend::parallel ? omp::moments(points, dim, exec.threads)
                                             : serial::moments(points, dim);
}

double abs_moment(std::span<const double> points, std::size_t dim, double p, const Exec& exec) {
    return exec.backend == Backend::parallel ? omp::abs_moment(points, dim, p, exec.threads)
                                             : serial::abs_moment(points, dim, p);
}

MinStep min_step(std::span<const double> states, std::size_t dim, const EmpiricalMeasure& mu,
                 const TimestepPolicy& policy, const Exec& exec) {
    return exec.backend == Backend::parallel ? omp::min_step(states, dim, mu, policy, exec.threads)
                                             : serial::min_step(states, dim, mu, policy);
}

std::size_t em_update(std::span<double> states, const ModelSpec& model, const EmpiricalMeasure& mu,
                      double h, std::span<const double> dW, std::span<const double> dW0,
                      DriftForm drift, const Exec& exec) {
    return exec.backend == Backend::parallel
               ? omp::em_update(states, model, mu, h, dW, dW0, drift, exec.threads)
               : serial::em_update(states, model, mu, h, dW, dW0, drift);
}

void brownian_sums(const NoiseDriver& driver, std::span<const double> breakpoints,
                   std::size_t k_begin, std::size_t k_end, std::span<double> out,
                   const Exec& exec) {
    if (exec.backend == Backend::parallel) {
        omp::brownian_sums(driver, breakpoints, k_begin, k_end, out, exec.threads);
    } else {
        serial::brownian_sums(driver, breakpoints, k_begin, k_end, out);
    }
}

}  // namespace mkv::kernels
