#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mkv/measure.hpp"
#include "mkv/philox.hpp"

namespace mkv {

// Coefficient signature: writes b (d), sigma (d x m, row-major) or sigma^0
// (d x m0, row-major) for state x under measure mu into `out`.
using CoefficientFn =
    std::function<void(std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out)>;

// Draws one initial state X_0 into `out` (length d).
using InitialSampler = std::function<void(NormalStream& rng, std::span<double> out)>;

struct DissipativityConstants {
    double lambda1;
    double lambda2;
    double gamma1;  // one-point form: -gamma1 |x|^2 + lambda2 W2^2(mu, delta_0) + eta
    double eta;
};

// dX = b(X, mu) dt + sigma(X, mu) dW + sigma0(X, mu) dW^0.
struct ModelSpec {
    std::string name;
    std::size_t d = 1;
    std::size_t m = 1;
    std::size_t m0 = 1;
    CoefficientFn drift;
    CoefficientFn diffusion;
    CoefficientFn common_diffusion;
    double q = 0.0;
    double p_max = 2.0;
    // Constant of the one-sided (monotonicity) condition.
    std::optional<double> monotone_L;
    // Constant of the polynomial Lipschitz bound on b; falls back to monotone_L.
    std::optional<double> lipschitz_L;
    std::optional<DissipativityConstants> dissipativity;
    InitialSampler initial_sampler;

    // Throws InvalidArgument on missing functions or violated invariants.
    void validate() const;

    std::optional<double> growth_L() const { return lipschitz_L ? lipschitz_L : monotone_L; }

    std::vector<double> eval_drift(std::span<const double> x, const EmpiricalMeasure& mu) const;
    std::vector<double> eval_diffusion(std::span<const double> x, const EmpiricalMeasure& mu) const;
    std::vector<double> eval_common_diffusion(std::span<const double> x,
                                              const EmpiricalMeasure& mu) const;
};

enum class InitVariant {
    sin_gaussian,       // X_0 = sin(xi), xi ~ N(0, 1) per particle
    deterministic_zero  // literal X_0 = sin(W(0)) = 0
};

// Two readings of the example2 common noise coefficient: with or without the leading 1.
enum class CommonDiffusionVariant { with_one, without_one };

// example2 drift term. The literal -3 x^2 |x| is even in x and not dissipative;
// odd_cubic uses -3 x |x|^2.
enum class Example2Drift { odd_cubic, literal };

struct BuiltinOptions {
    InitVariant init = InitVariant::sin_gaussian;
    CommonDiffusionVariant sigma0 = CommonDiffusionVariant::with_one;
    Example2Drift example2_drift = Example2Drift::odd_cubic;
};

// b = x - 8x^3 + 1/2 E[mu], sigma = sigma0 = 1/2 (x^2 + E[mu]).
ModelSpec builtin_example_1(const BuiltinOptions& options = {});

// b = -2x - 3x|x|^2 - 2 E[mu], sigma = sigma0 = 1/4 (1 + |x|^1.5 + E[mu]).
ModelSpec builtin_example_2(const BuiltinOptions& options = {});

// "example1" | "example2"; throws InvalidArgument otherwise.
ModelSpec model_by_name(const std::string& name, const BuiltinOptions& options = {});

double euclidean_norm(std::span<const double> v) noexcept;
// Hilbert-Schmidt norm of a row-major matrix.
inline double frobenius_norm(std::span<const double> a) noexcept { return euclidean_norm(a); }

}  // namespace mkv
