#include "mkv/model.hpp"

#include <cmath>

#include "mkv/error.hpp"

namespace mkv {

double euclidean_norm(std::span<const double> v) noexcept {
    double s = 0.0;
    for (double a : v) s += a * a;
    return std::sqrt(s);
}

void ModelSpec::validate() const {
    if (d == 0 || m == 0 || m0 == 0) {
        throw InvalidArgument("model '" + name + "': dimensions d, m, m0 must be positive");
    }
    if (!drift || !diffusion || !common_diffusion) {
        throw InvalidArgument("model '" + name + "': drift, diffusion and common diffusion are required");
    }
    if (!initial_sampler) throw InvalidArgument("model '" + name + "': missing initial sampler");
    if (!(q >= 0.0)) throw InvalidArgument("model '" + name + "': q must be >= 0");
    if (!(p_max >= 2.0)) throw InvalidArgument("model '" + name + "': p_max must be >= 2");
    if (monotone_L && !(*monotone_L > 0.0)) {
        throw InvalidArgument("model '" + name + "': L must be positive");
    }
    if (dissipativity && !(dissipativity->lambda1 > 0.0 && dissipativity->lambda2 > 0.0)) {
        throw InvalidArgument("model '" + name + "': lambda1 and lambda2 must be positive");
    }
}

std::vector<double> ModelSpec::eval_drift(std::span<const double> x,
                                          const EmpiricalMeasure& mu) const {
    std::vector<double> out(d);
    drift(x, mu, out);
    return out;
}

std::vector<double> ModelSpec::eval_diffusion(std::span<const double> x,
                                              const EmpiricalMeasure& mu) const {
    std::vector<double> out(d * m);
    diffusion(x, mu, out);
    return out;
}

std::vector<double> ModelSpec::eval_common_diffusion(std::span<const double> x,
                                                     const EmpiricalMeasure& mu) const {
    std::vector<double> out(d * m0);
    common_diffusion(x, mu, out);
    return out;
}

namespace {

InitialSampler make_initial_sampler(InitVariant variant) {
    if (variant == InitVariant::deterministic_zero) {
        return [](NormalStream&, std::span<double> out) {
            for (double& v : out) v = 0.0;
        };
    }
    return [](NormalStream& rng, std::span<double> out) {
        for (double& v : out) v = std::sin(rng.next());
    };
}

}  // namespace

ModelSpec builtin_example_1(const BuiltinOptions& options) {
    ModelSpec model;
    model.name = "example1";
    model.d = model.m = model.m0 = 1;
    model.drift = [](std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out) {
        const double v = x[0];
        out[0] = v - 8.0 * v * v * v + 0.5 * mu.mean()[0];
    };
    auto sigma = [](std::span<const double> x, const EmpiricalMeasure& mu, std::span<double> out) {
        out[0] = 0.5 * (x[0] * x[0] + mu.mean()[0]);
    };
    model.diffusion = sigma;
    model.common_diffusion = sigma;
    model.q = 2.0;
    model.p_max = 16.0;
    // Estimated with the sampling checkers; not given numerically in the source.
    model.monotone_L = 2.0;
    model.lipschitz_L = 12.0;
    model.initial_sampler = make_initial_sampler(options.init);
    return model;
}

ModelSpec builtin_example_2(const BuiltinOptions& options) {
    ModelSpec model;
    model.name = "example2";
    model.d = model.m = model.m0 = 1;
    if (options.example2_drift == Example2Drift::literal) {
        model.drift = [](std::span<const double> x, const EmpiricalMeasure& mu,
                         std::span<double> out) {
            const double v = x[0];
            out[0] = -2.0 * v - 3.0 * v * v * std::abs(v) - 2.0 * mu.mean()[0];
        };
    } else {
        model.drift = [](std::span<const double> x, const EmpiricalMeasure& mu,
                         std::span<double> out) {
            const double v = x[0];
            out[0] = -2.0 * v - 3.0 * v * std::abs(v) * std::abs(v) - 2.0 * mu.mean()[0];
        };
    }
    model.diffusion = [](std::span<const double> x, const EmpiricalMeasure& mu,
                         std::span<double> out) {
        out[0] = 0.25 * (1.0 + std::pow(std::abs(x[0]), 1.5) + mu.mean()[0]);
    };
    const double lead = options.sigma0 == CommonDiffusionVariant::with_one ? 1.0 : 0.0;
    model.common_diffusion = [lead](std::span<const double> x, const EmpiricalMeasure& mu,
                                    std::span<double> out) {
        out[0] = 0.25 * (lead + std::pow(std::abs(x[0]), 1.5) + mu.mean()[0]);
    };
    model.q = 2.0;
    model.p_max = 16.0;
    model.monotone_L = 2.5;
    model.lipschitz_L = 9.0;
    model.dissipativity = DissipativityConstants{1.5, 2.5, 4.0, 1.5};
    model.initial_sampler = make_initial_sampler(options.init);
    return model;
}

ModelSpec model_by_name(const std::string& name, const BuiltinOptions& options) {
    if (name == "example1") return builtin_example_1(options);
    if (name == "example2") return builtin_example_2(options);
    throw InvalidArgument("unknown model '" + name + "' (expected example1 or example2)");
}

}  // namespace mkv
