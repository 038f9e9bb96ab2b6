#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>

#include "mkv/assumptions.hpp"
#include "mkv/measure.hpp"
#include "mkv/model.hpp"

namespace mkv {

// h(x, mu) > 0.
using StepFn = std::function<double(std::span<const double> x, const EmpiricalMeasure& mu)>;

enum class HorizonMode { finite, infinite };

// Which point of the band [delta min(cap, h), min(delta cap, h)] is executed.
enum class ClampRule {
    upper,         // min(delta cap, h)
    proportional,  // delta min(cap, h), the choice used by the worked examples
};

ClampRule clamp_rule_from_name(const std::string& name);
std::string to_string(ClampRule rule);

// (alpha1, alpha2, beta, varpi) with h(x, mu) >= (alpha1|x|^varpi + alpha2 W2^varpi(mu, delta_0) + beta)^-1.
struct LowerBoundWitness {
    double alpha1;
    double alpha2;
    double beta;
    double varpi;
};

struct TimestepPolicy {
    HorizonMode mode = HorizonMode::finite;
    // T in finite mode, h_max in infinite mode.
    double cap = 1.0;
    double delta = 1.0;
    double C_h = 1.0;
    ClampRule clamp = ClampRule::upper;
    StepFn h;
    std::optional<LowerBoundWitness> lower_bound;

    static TimestepPolicy finite(double T, double delta, StepFn h, double C_h = 1.0);
    static TimestepPolicy infinite(double h_max, double delta, StepFn h, double C_h = 1.0);

    // Same policy with a different delta (one policy per level).
    TimestepPolicy with_delta(double new_delta) const;

    // Throws InvalidArgument unless 0 < delta <= 1, cap > 0 and h is set.
    void validate() const;
};

// C_h / (1 + |b||s| + |b||s0| + |x|^q)^2 with q taken from the model.
StepFn canonical_h(ModelSpec model, double C_h);

// (1 / (1 + 8|x|^5 + 1/2 int |x|^2 dmu))^2
StepFn example1_h();

// min(1, (3|x|^3 + 2 int |x|^2 dmu)^-1), 1 when the denominator vanishes.
StepFn example2_h();

enum class StepChoice { canonical, example1, example2 };

StepChoice step_choice_from_name(const std::string& name);
std::string to_string(StepChoice choice);
StepFn make_step_fn(StepChoice choice, const ModelSpec& model, double C_h);

// h^delta per the policy's clamp rule; min(delta * cap, h(x, mu)) by default.
// Throws NumericalBlowup when h is not strictly positive and finite.
double clamp_step(const TimestepPolicy& policy, std::span<const double> x,
                  const EmpiricalMeasure& mu);

// Worst margin of (alpha1|x|^varpi + alpha2 W2^varpi + beta)^-1 - h(x, mu).
// Throws MissingConstant without a declared witness.
AssumptionReport check_lower_bound(const TimestepPolicy& policy, std::size_t dim,
                                   const CheckOptions& options);

// Worst margin of h(x, mu) - h_max for infinite-mode policies.
AssumptionReport check_step_cap(const TimestepPolicy& policy, std::size_t dim,
                                const CheckOptions& options);

// Product bound |b|(|s| + |s0|) h^{1/2}: largest observed value.
double max_product_bound(const ModelSpec& model, const StepFn& h, const CheckOptions& options);

}  // namespace mkv
