#include "mkv/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mkv/error.hpp"
#include "mkv/kernels.hpp"

namespace mkv {

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> points, std::size_t dim)
    : points_(std::move(points)), dim_(dim) {
    if (dim_ == 0) throw InvalidArgument("empirical measure: dimension must be positive");
    if (points_.empty()) throw InvalidArgument("empirical measure: needs at least one point");
    if (points_.size() % dim_ != 0) {
        throw InvalidArgument("empirical measure: buffer of " + std::to_string(points_.size()) +
                              " values is not a multiple of d = " + std::to_string(dim_));
    }
    const std::size_t bad = kernels::serial::find_nonfinite(points_);
    if (bad != kernels::npos) {
        throw InvalidArgument("empirical measure: non-finite coordinate at point " +
                              std::to_string(bad / dim_));
    }
    auto moments = kernels::serial::moments(points_, dim_);
    mean_ = std::move(moments.mean);
    second_moment_ = moments.second_moment;
}

EmpiricalMeasure EmpiricalMeasure::dirac_origin(std::size_t n, std::size_t dim) {
    return EmpiricalMeasure(std::vector<double>(n * dim, 0.0), dim);
}

std::vector<double> mean(const EmpiricalMeasure& mu) {
    return {mu.mean().begin(), mu.mean().end()};
}

double second_moment(const EmpiricalMeasure& mu) { return mu.second_moment(); }

double w2_distance_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.dim() != 1 || nu.dim() != 1) {
        throw UnsupportedConfiguration("w2_distance_1d: both measures must be 1-dimensional");
    }
    if (mu.size() != nu.size()) {
        throw UnsupportedConfiguration("w2_distance_1d: unequal particle counts (" +
                                       std::to_string(mu.size()) + " vs " +
                                       std::to_string(nu.size()) + ")");
    }
    std::vector<double> a(mu.points().begin(), mu.points().end());
    std::vector<double> b(nu.points().begin(), nu.points().end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double gap = a[i] - b[i];
        sum += gap * gap;
    }
    return std::sqrt(sum / static_cast<double>(a.size()));
}

double w2_distance_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                              std::size_t cap) {
    if (mu.dim() != nu.dim()) {
        throw UnsupportedConfiguration("w2_distance_assignment: dimension mismatch");
    }
    if (mu.size() != nu.size()) {
        throw UnsupportedConfiguration("w2_distance_assignment: unequal particle counts");
    }
    const std::size_t n = mu.size();
    if (n > cap) {
        throw UnsupportedConfiguration(
            "w2_distance_assignment: N = " + std::to_string(n) + " exceeds the oracle cap " +
            std::to_string(cap) + "; use w2_distance_1d for 1-d data or subsample");
    }
    const std::size_t d = mu.dim();
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = mu.point(i);
        for (std::size_t j = 0; j < n; ++j) {
            const auto y = nu.point(j);
            double c = 0.0;
            for (std::size_t k = 0; k < d; ++k) c += (x[k] - y[k]) * (x[k] - y[k]);
            cost[i * n + j] = c;
        }
    }
    const auto perm = detail::solve_assignment(cost, n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost[i * n + perm[i]];
    return std::sqrt(total / static_cast<double>(n));
}

double w2_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.dim() == 1 && nu.dim() == 1) return w2_distance_1d(mu, nu);
    return w2_distance_assignment(mu, nu);
}

namespace detail {

// Shortest augmenting path (Jonker-Volgenant style) with row/column
// potentials u, v; 1-based internally, column 0 is the virtual source.
std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t row = 1; row <= n; ++row) {
        match[0] = row;
        std::size_t col0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[col0] = 1;
            const std::size_t r = match[col0];
            double delta = inf;
            std::size_t col1 = 0;
            for (std::size_t col = 1; col <= n; ++col) {
                if (used[col]) continue;
                const double reduced = cost[(r - 1) * n + (col - 1)] - u[r] - v[col];
                if (reduced < minv[col]) {
                    minv[col] = reduced;
                    way[col] = col0;
                }
                if (minv[col] < delta) {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for (std::size_t col = 0; col <= n; ++col) {
                if (used[col]) {
                    u[match[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
        } while (match[col0] != 0);
        do {
            const std::size_t col1 = way[col0];
            match[col0] = match[col1];
            col0 = col1;
        } while (col0 != 0);
    }
    std::vector<std::size_t> perm(n);
    for (std::size_t col = 1; col <= n; ++col) perm[match[col] - 1] = col - 1;
    return perm;
}

}  // namespace detail

}  // namespace mkv
