#include "mkv/stepsize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mkv/error.hpp"

namespace mkv {

TimestepPolicy TimestepPolicy::finite(double T, double delta, StepFn h, double C_h) {
    TimestepPolicy p;
    p.mode = HorizonMode::finite;
    p.cap = T;
    p.delta = delta;
    p.C_h = C_h;
    p.h = std::move(h);
    p.validate();
    return p;
}

TimestepPolicy TimestepPolicy::infinite(double h_max, double delta, StepFn h, double C_h) {
    TimestepPolicy p;
    p.mode = HorizonMode::infinite;
    p.cap = h_max;
    p.delta = delta;
    p.C_h = C_h;
    p.h = std::move(h);
    p.validate();
    return p;
}

TimestepPolicy TimestepPolicy::with_delta(double new_delta) const {
    TimestepPolicy p = *this;
    p.delta = new_delta;
    p.validate();
    return p;
}

void TimestepPolicy::validate() const {
    if (!(delta > 0.0 && delta <= 1.0)) {
        throw InvalidArgument("step.delta must lie in (0, 1]");
    }
    if (!(cap > 0.0) || !std::isfinite(cap)) {
        throw InvalidArgument(mode == HorizonMode::finite ? "step.T must be positive"
                                                          : "step.h_max must be positive");
    }
    if (!(C_h > 0.0)) throw InvalidArgument("step.C_h must be positive");
    if (!h) throw InvalidArgument("timestep policy has no h function");
}

StepFn canonical_h(ModelSpec model, double C_h) {
    if (!(C_h > 0.0)) throw InvalidArgument("canonical h: C_h must be positive");
    return [model = std::move(model), C_h](std::span<const double> x, const EmpiricalMeasure& mu) {
        const double b = euclidean_norm(model.eval_drift(x, mu));
        const double s = euclidean_norm(model.eval_diffusion(x, mu));
        const double s0 = euclidean_norm(model.eval_common_diffusion(x, mu));
        const double denom = 1.0 + b * s + b * s0 + std::pow(euclidean_norm(x), model.q);
        return C_h / (denom * denom);
    };
}

StepFn example1_h() {
    return [](std::span<const double> x, const EmpiricalMeasure& mu) {
        const double r = euclidean_norm(x);
        const double r2 = r * r;
        const double inv = 1.0 / (1.0 + 8.0 * r2 * r2 * r + 0.5 * mu.second_moment());
        return inv * inv;
    };
}

StepFn example2_h() {
    return [](std::span<const double> x, const EmpiricalMeasure& mu) {
        const double r = euclidean_norm(x);
        const double denom = 3.0 * r * r * r + 2.0 * mu.second_moment();
        // 1/denom >= 1 whenever denom <= 1, including the all-zero input.
        if (denom <= 1.0) return 1.0;
        return 1.0 / denom;
    };
}

StepChoice step_choice_from_name(const std::string& name) {
    if (name == "canonical") return StepChoice::canonical;
    if (name == "example1") return StepChoice::example1;
    if (name == "example2") return StepChoice::example2;
    throw InvalidArgument("unknown step.h '" + name + "' (expected canonical, example1, example2)");
}

std::string to_string(StepChoice choice) {
    switch (choice) {
        case StepChoice::canonical: return "canonical";
        case StepChoice::example1: return "example1";
        case StepChoice::example2: return "example2";
    }
    return "canonical";
}

StepFn make_step_fn(StepChoice choice, const ModelSpec& model, double C_h) {
    switch (choice) {
        case StepChoice::example1: return example1_h();
        case StepChoice::example2: return example2_h();
        case StepChoice::canonical: break;
    }
    return canonical_h(model, C_h);
}

double clamp_step(const TimestepPolicy& policy, std::span<const double> x,
                  const EmpiricalMeasure& mu) {
    const double h = policy.h(x, mu);
    if (!(h > 0.0) || !std::isfinite(h)) {
        std::ostringstream os;
        os.precision(17);
        os << "timestep function returned " << h << " at x = (";
        for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
        os << ")";
        throw NumericalBlowup(os.str(), 0, 0.0, {x.begin(), x.end()});
    }
    if (policy.clamp == ClampRule::proportional) return policy.delta * std::min(policy.cap, h);
    return std::min(policy.delta * policy.cap, h);
}

ClampRule clamp_rule_from_name(const std::string& name) {
    if (name == "upper") return ClampRule::upper;
    if (name == "proportional") return ClampRule::proportional;
    throw InvalidArgument("step.clamp must be 'upper' or 'proportional' (got '" + name + "')");
}

std::string to_string(ClampRule rule) {
    return rule == ClampRule::upper ? "upper" : "proportional";
}

AssumptionReport check_lower_bound(const TimestepPolicy& policy, std::size_t dim,
                                   const CheckOptions& options) {
    if (!policy.lower_bound) {
        throw MissingConstant("lower-bound check: policy declares no (alpha1, alpha2, beta, varpi)");
    }
    const auto& w = *policy.lower_bound;
    AssumptionReport report;
    report.assumption = "lower-bound";
    report.constants = {
        {"alpha1", w.alpha1}, {"alpha2", w.alpha2}, {"beta", w.beta}, {"varpi", w.varpi}};
    detail::TupleSampler sampler(dim, options);
    auto consider = [&](const std::vector<double>& x, const EmpiricalMeasure& mu) {
        const double w2 = std::sqrt(mu.second_moment());
        const double bound = 1.0 / (w.alpha1 * std::pow(euclidean_norm(x), w.varpi) +
                                    w.alpha2 * std::pow(w2, w.varpi) + w.beta);
        const double margin = bound - policy.h(x, mu);
        ++report.samples;
        if (margin > report.worst_margin) {
            report.worst_margin = margin;
            report.x = x;
            report.measure.assign(mu.points().begin(), mu.points().end());
        }
    };
    // The origin is where h is largest relative to most witnesses.
    consider(std::vector<double>(dim, 0.0), EmpiricalMeasure::dirac_origin(options.cloud_size, dim));
    for (std::size_t trial = 1; trial < options.trials; ++trial) {
        const auto x = sampler.state();
        consider(x, sampler.cloud());
    }
    return report;
}

AssumptionReport check_step_cap(const TimestepPolicy& policy, std::size_t dim,
                                const CheckOptions& options) {
    AssumptionReport report;
    report.assumption = "step-cap";
    report.constants = {{"h_max", policy.cap}};
    detail::TupleSampler sampler(dim, options);
    for (std::size_t trial = 0; trial < options.trials; ++trial) {
        const auto x = trial == 0 ? std::vector<double>(dim, 0.0) : sampler.state();
        const auto mu =
            trial == 0 ? EmpiricalMeasure::dirac_origin(options.cloud_size, dim) : sampler.cloud();
        const double margin = policy.h(x, mu) - policy.cap;
        ++report.samples;
        if (margin > report.worst_margin) {
            report.worst_margin = margin;
            report.x = x;
            report.measure.assign(mu.points().begin(), mu.points().end());
        }
    }
    return report;
}

double max_product_bound(const ModelSpec& model, const StepFn& h, const CheckOptions& options) {
    detail::TupleSampler sampler(model.d, options);
    double worst = 0.0;
    for (std::size_t trial = 0; trial < options.trials; ++trial) {
        const auto x = sampler.state();
        const auto mu = sampler.cloud();
        const double b = euclidean_norm(model.eval_drift(x, mu));
        const double s = euclidean_norm(model.eval_diffusion(x, mu));
        const double s0 = euclidean_norm(model.eval_common_diffusion(x, mu));
        worst = std::max(worst, b * (s + s0) * std::sqrt(h(x, mu)));
    }
    return worst;
}

}  // namespace mkv
