#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mkv {

// Equal-weight empirical measure (1/N) sum_j delta_{x_j} over N points in R^d.
//
// Points are stored row-major (point j occupies [j*d, (j+1)*d)). The measure
// is an immutable snapshot: mean and second moment are reduced once at
// construction with a fixed block order, so the values are bit-identical no
// matter how many threads performed the reduction.
class EmpiricalMeasure {
public:
    // Throws InvalidArgument when N == 0, d == 0, the buffer size is not a
    // multiple of d, or any coordinate is non-finite.
    EmpiricalMeasure(std::vector<double> points, std::size_t dim);

    // N copies of the origin in R^d (delta_0 as an N-point cloud).
    static EmpiricalMeasure dirac_origin(std::size_t n, std::size_t dim);

    std::size_t size() const noexcept { return points_.size() / dim_; }
    std::size_t dim() const noexcept { return dim_; }

    std::span<const double> point(std::size_t j) const noexcept {
        return {points_.data() + j * dim_, dim_};
    }
    std::span<const double> points() const noexcept { return points_; }

    std::span<const double> mean() const noexcept { return mean_; }
    // (1/N) sum_j |x_j|^2, i.e. W2^2(mu, delta_0).
    double second_moment() const noexcept { return second_moment_; }

private:
    std::vector<double> points_;
    std::size_t dim_;
    std::vector<double> mean_;
    double second_moment_ = 0.0;
};

std::vector<double> mean(const EmpiricalMeasure& mu);
double second_moment(const EmpiricalMeasure& mu);

// Exact W2 for 1-d equal-N measures via sorted order statistics.
// Throws UnsupportedConfiguration when d != 1 or the sizes differ.
double w2_distance_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

inline constexpr std::size_t kDefaultAssignmentCap = 512;

// Exact W2 in any dimension by minimum-cost perfect matching with squared
// Euclidean cost. O(N^3); for tests and assumption checking only.
double w2_distance_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                              std::size_t cap = kDefaultAssignmentCap);

// 1-d path when d == 1, otherwise the assignment solver.
double w2_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

namespace detail {

// Dense square assignment problem, minimising sum_i cost(i, perm[i]).
// Returns perm (row -> column). Shortest augmenting path with potentials.
std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n);

}  // namespace detail

}  // namespace mkv
