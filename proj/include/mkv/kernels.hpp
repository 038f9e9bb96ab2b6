#pragma once

// Data-parallel inner loops of the particle system. Every kernel exists twice:
// `serial::` is the reference, `omp::` the OpenMP version. Reductions use a
// fixed block decomposition (kBlock points per partial sum, partials combined
// in block order) so both produce bit-identical results for any thread count.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "mkv/exec.hpp"
#include "mkv/measure.hpp"
#include "mkv/model.hpp"
#include "mkv/noise.hpp"
#include "mkv/stepsize.hpp"

namespace mkv::kernels {

inline constexpr std::size_t kBlock = 256;
inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

struct Moments {
    std::vector<double> mean;
    double second_moment = 0.0;
};

struct MinStep {
    double h = std::numeric_limits<double>::infinity();
    std::size_t argmin = npos;
};

enum class DriftForm {
    plain,  // b h
    tamed   // b h / (1 + h |b|)
};

namespace serial {

Moments moments(std::span<const double> points, std::size_t dim);

// (1/N) sum_j |x_j|^p
double abs_moment(std::span<const double> points, std::size_t dim, double p);

// Index of the first non-finite value, or npos.
std::size_t find_nonfinite(std::span<const double> values);

// min_i h^delta(x_i, mu). Throws NumericalBlowup for the lowest failing index.
MinStep min_step(std::span<const double> states, std::size_t dim, const EmpiricalMeasure& mu,
                 const TimestepPolicy& policy);

// x_i += b h + sigma dW_i + sigma0 dW0 for every particle, coefficients frozen
// at mu. Returns the lowest particle index whose new state is non-finite, or npos.
std::size_t em_update(std::span<double> states, const ModelSpec& model, const EmpiricalMeasure& mu,
                      double h, std::span<const double> dW, std::span<const double> dW0,
                      DriftForm drift);

// For the first out.size()/m particles:
// out[i*m + c] = sum_{k in [k_begin, k_end)} sqrt(t_{k+1} - t_k) Z(particle i, c, k)
void brownian_sums(const NoiseDriver& driver, std::span<const double> breakpoints,
                   std::size_t k_begin, std::size_t k_end, std::span<double> out);

}  // namespace serial

namespace omp {

Moments moments(std::span<const double> points, std::size_t dim, int threads = 0);
double abs_moment(std::span<const double> points, std::size_t dim, double p, int threads = 0);
std::size_t find_nonfinite(std::span<const double> values, int threads = 0);
MinStep min_step(std::span<const double> states, std::size_t dim, const EmpiricalMeasure& mu,
                 const TimestepPolicy& policy, int threads = 0);
std::size_t em_update(std::span<double> states, const ModelSpec& model, const EmpiricalMeasure& mu,
                      double h, std::span<const double> dW, std::span<const double> dW0,
                      DriftForm drift, int threads = 0);
void brownian_sums(const NoiseDriver& driver, std::span<const double> breakpoints,
                   std::size_t k_begin, std::size_t k_end, std::span<double> out, int threads = 0);

// Threads the OpenMP runtime would use for a parallel region.
int max_threads();

}  // namespace omp

// Backend dispatch.
Moments moments(std::span<const double> points, std::size_t dim, const Exec& exec);
double abs_moment(std::span<const double> points, std::size_t dim, double p, const Exec& exec);
MinStep min_step(std::span<const double> states, std::size_t dim, const EmpiricalMeasure& mu,
                 const TimestepPolicy& policy, const Exec& exec);
std::size_t em_update(std::span<double> states, const ModelSpec& model, const EmpiricalMeasure& mu,
                      double h, std::span<const double> dW, std::span<const double> dW0,
                      DriftForm drift, const Exec& exec);
void brownian_sums(const NoiseDriver& driver, std::span<const double> breakpoints,
                   std::size_t k_begin, std::size_t k_end, std::span<double> out, const Exec& exec);

namespace detail {

// Per-particle update shared by both kernel families. `scratch` holds at
// least d + d*m + d*m0 doubles.
bool update_particle(std::span<double> x, const ModelSpec& model, const EmpiricalMeasure& mu,
                     double h, std::span<const double> dW, std::span<const double> dW0,
                     DriftForm drift, std::span<double> scratch);

double brownian_sum(const NoiseDriver& driver, std::span<const double> breakpoints,
                    std::size_t k_begin, std::size_t k_end, PathId path, std::size_t coord);

}  // namespace detail

}  // namespace mkv::kernels
