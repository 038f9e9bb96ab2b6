#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mkv/measure.hpp"
#include "mkv/model.hpp"

namespace mkv {

// Sampling-based falsification report. worst_margin is the maximum over the
// tested tuples of (lhs - rhs); a value <= 0 means no violation was observed,
// which is evidence rather than proof.
struct AssumptionReport {
    std::string assumption;
    std::size_t samples = 0;
    double worst_margin = -std::numeric_limits<double>::infinity();
    // Witness of the worst case. x_prime / measure_prime are empty for
    // one-point inequalities.
    std::vector<double> x;
    std::vector<double> x_prime;
    std::vector<double> measure;
    std::vector<double> measure_prime;
    std::vector<std::pair<std::string, double>> constants;

    bool passed(double tolerance = 0.0) const noexcept { return worst_margin <= tolerance; }
};

struct CheckOptions {
    std::size_t trials = 10000;
    double radius = 3.0;
    std::uint64_t seed = 0;
    std::size_t cloud_size = 8;  // points per sampled measure
};

// <x-x', b-b'> + (p-1)(|s-s'|^2 + |s0-s0'|^2) - L(|x-x'|^2 + W2^2(mu, mu')).
double monotonicity_margin(const ModelSpec& model, double L, double p, std::span<const double> x,
                           std::span<const double> x_prime, const EmpiricalMeasure& mu,
                           const EmpiricalMeasure& mu_prime);

// |b - b'| - L[(1 + |x|^q + |x'|^q)|x - x'| + W2(mu, mu')].
double lipschitz_margin(const ModelSpec& model, double L, std::span<const double> x,
                        std::span<const double> x_prime, const EmpiricalMeasure& mu,
                        const EmpiricalMeasure& mu_prime);

// Two-point dissipativity: monotonicity LHS + lambda1 |x-x'|^2 - lambda2 W2^2.
double dissipativity_margin(const ModelSpec& model, const DissipativityConstants& c, double p,
                            std::span<const double> x, std::span<const double> x_prime,
                            const EmpiricalMeasure& mu, const EmpiricalMeasure& mu_prime);

// <x, b> + (p-1)/2 (|s|^2 + |s0|^2) + gamma1 |x|^2 - lambda2 W2^2(mu, delta_0) - eta.
double one_point_dissipativity_margin(const ModelSpec& model, const DissipativityConstants& c,
                                      double p, std::span<const double> x,
                                      const EmpiricalMeasure& mu);

// `L` overrides the declared constant. Throws MissingConstant when neither exists.
AssumptionReport check_monotonicity(const ModelSpec& model, double p, const CheckOptions& options,
                                    std::optional<double> L = std::nullopt);

AssumptionReport check_polynomial_lipschitz(const ModelSpec& model, const CheckOptions& options,
                                            std::optional<double> L = std::nullopt);

struct DissipativityReport {
    AssumptionReport two_point;
    AssumptionReport one_point;
};

DissipativityReport check_dissipativity(
    const ModelSpec& model, double p, const CheckOptions& options,
    std::optional<DissipativityConstants> constants = std::nullopt);

// Smallest C1, C2 observed for the growth bounds
//   |b| <= C1[(1 + |x|^{q+1}) + W2(mu, delta_0)]
//   |s|^2 + |s0|^2 <= C2[(1 + |x|^{q+2}) + W2^2(mu, delta_0)].
struct GrowthConstants {
    double c1 = 0.0;
    double c2 = 0.0;
    std::size_t samples = 0;
};

GrowthConstants estimate_growth_constants(const ModelSpec& model, const CheckOptions& options);

namespace detail {

// Tuple sampler shared by the checkers: states uniform in the ball, measures
// as small clouds in the ball. A fraction of tuples repeat x or mu so the
// equality boundary cases are exercised.
struct SampledTuple {
    std::vector<double> x;
    std::vector<double> x_prime;
    EmpiricalMeasure mu;
    EmpiricalMeasure mu_prime;
};

class TupleSampler {
public:
    TupleSampler(std::size_t dim, const CheckOptions& options);
    SampledTuple next();
    std::vector<double> state();
    EmpiricalMeasure cloud();

private:
    std::size_t dim_;
    CheckOptions options_;
    NormalStream rng_;
    std::uint64_t count_ = 0;
};

}  // namespace detail

}  // namespace mkv
