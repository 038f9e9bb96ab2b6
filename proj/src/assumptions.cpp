#include "mkv/assumptions.hpp"

#include <cmath>
#include <sstream>

#include "mkv/error.hpp"

namespace mkv {

namespace {

std::string describe(std::span<const double> v) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << ')';
    return os.str();
}

void require_finite(std::span<const double> values, const char* what, std::span<const double> x) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw NumericalBlowup(std::string("non-finite ") + what + " at x = " + describe(x), 0,
                                  0.0, {x.begin(), x.end()});
        }
    }
}

struct Coefficients {
    std::vector<double> b, s, s0;
};

Coefficients evaluate(const ModelSpec& model, std::span<const double> x, const EmpiricalMeasure& mu) {
    Coefficients c{model.eval_drift(x, mu), model.eval_diffusion(x, mu),
                   model.eval_common_diffusion(x, mu)};
    require_finite(c.b, "drift", x);
    require_finite(c.s, "diffusion", x);
    require_finite(c.s0, "common diffusion", x);
    return c;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

double dot_difference(std::span<const double> x, std::span<const double> xp,
                      std::span<const double> b, std::span<const double> bp) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - xp[i]) * (b[i] - bp[i]);
    return s;
}

// <x-x', b-b'> + (p-1)(|s-s'|^2 + |s0-s0'|^2)
double monotone_lhs(const ModelSpec& model, double p, std::span<const double> x,
                    std::span<const double> xp, const EmpiricalMeasure& mu,
                    const EmpiricalMeasure& mup) {
    const auto c = evaluate(model, x, mu);
    const auto cp = evaluate(model, xp, mup);
    return dot_difference(x, xp, c.b, cp.b) +
           (p - 1.0) * (squared_distance(c.s, cp.s) + squared_distance(c.s0, cp.s0));
}

void record(AssumptionReport& report, double margin, const detail::SampledTuple& tuple,
            bool two_point) {
    ++report.samples;
    if (!(margin > report.worst_margin)) return;
    report.worst_margin = margin;
    report.x = tuple.x;
    report.measure.assign(tuple.mu.points().begin(), tuple.mu.points().end());
    if (two_point) {
        report.x_prime = tuple.x_prime;
        report.measure_prime.assign(tuple.mu_prime.points().begin(),
                                    tuple.mu_prime.points().end());
    } else {
        report.x_prime.clear();
        report.measure_prime.clear();
    }
}

}  // namespace

double monotonicity_margin(const ModelSpec& model, double L, double p, std::span<const double> x,
                           std::span<const double> x_prime, const EmpiricalMeasure& mu,
                           const EmpiricalMeasure& mu_prime) {
    const double w2 = w2_distance(mu, mu_prime);
    return monotone_lhs(model, p, x, x_prime, mu, mu_prime) -
           L * (squared_distance(x, x_prime) + w2 * w2);
}

double lipschitz_margin(const ModelSpec& model, double L, std::span<const double> x,
                        std::span<const double> x_prime, const EmpiricalMeasure& mu,
                        const EmpiricalMeasure& mu_prime) {
    const auto b = model.eval_drift(x, mu);
    const auto bp = model.eval_drift(x_prime, mu_prime);
    require_finite(b, "drift", x);
    require_finite(bp, "drift", x_prime);
    const double lhs = std::sqrt(squared_distance(b, bp));
    const double weight =
        1.0 + std::pow(euclidean_norm(x), model.q) + std::pow(euclidean_norm(x_prime), model.q);
    const double rhs =
        L * (weight * std::sqrt(squared_distance(x, x_prime)) + w2_distance(mu, mu_prime));
    return lhs - rhs;
}

double dissipativity_margin(const ModelSpec& model, const DissipativityConstants& c, double p,
                            std::span<const double> x, std::span<const double> x_prime,
                            const EmpiricalMeasure& mu, const EmpiricalMeasure& mu_prime) {
    const double w2 = w2_distance(mu, mu_prime);
    return monotone_lhs(model, p, x, x_prime, mu, mu_prime) +
           c.lambda1 * squared_distance(x, x_prime) - c.lambda2 * w2 * w2;
}

double one_point_dissipativity_margin(const ModelSpec& model, const DissipativityConstants& c,
                                      double p, std::span<const double> x,
                                      const EmpiricalMeasure& mu) {
    const auto k = evaluate(model, x, mu);
    double inner = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) inner += x[i] * k.b[i];
    const double s2 = euclidean_norm(k.s) * euclidean_norm(k.s);
    const double s02 = euclidean_norm(k.s0) * euclidean_norm(k.s0);
    const double x2 = euclidean_norm(x) * euclidean_norm(x);
    const double lhs = inner + 0.5 * (p - 1.0) * (s2 + s02);
    const double rhs = -c.gamma1 * x2 + c.lambda2 * mu.second_moment() + c.eta;
    return lhs - rhs;
}

AssumptionReport check_monotonicity(const ModelSpec& model, double p, const CheckOptions& options,
                                    std::optional<double> L) {
    if (!L) L = model.monotone_L;
    if (!L) throw MissingConstant("monotonicity check: model '" + model.name + "' declares no L");
    if (!(p >= 2.0)) throw InvalidArgument("monotonicity check: p must be >= 2");
    AssumptionReport report;
    report.assumption = "monotonicity";
    report.constants = {{"L", *L}, {"p", p}};
    detail::TupleSampler sampler(model.d, options);
    for (std::size_t trial = 0; trial < options.trials; ++trial) {
        const auto tuple = sampler.next();
        record(report,
               monotonicity_margin(model, *L, p, tuple.x, tuple.x_prime, tuple.mu, tuple.mu_prime),
               tuple, true);
    }
    return report;
}

AssumptionReport check_polynomial_lipschitz(const ModelSpec& model, const CheckOptions& options,
                                            std::optional<double> L) {
    if (!L) L = model.growth_L();
    if (!L) {
        throw MissingConstant("polynomial Lipschitz check: model '" + model.name +
                              "' declares no L");
    }
    AssumptionReport report;
    report.assumption = "lipschitz";
    report.constants = {{"L", *L}, {"q", model.q}};
    detail::TupleSampler sampler(model.d, options);
    for (std::size_t trial = 0; trial < options.trials; ++trial) {
        const auto tuple = sampler.next();
        record(report, lipschitz_margin(model, *L, tuple.x, tuple.x_prime, tuple.mu, tuple.mu_prime),
               tuple, true);
    }
    return report;
}

DissipativityReport check_dissipativity(const ModelSpec& model, double p,
                                        const CheckOptions& options,
                                        std::optional<DissipativityConstants> constants) {
    if (!constants) constants = model.dissipativity;
    if (!constants) {
        throw MissingConstant("dissipativity check: model '" + model.name +
                              "' declares no (lambda1, lambda2, gamma1, eta)");
    }
    const auto& c = *constants;
    DissipativityReport out;
    out.two_point.assumption = "dissipativity";
    out.one_point.assumption = "dissipativity-one-point";
    out.two_point.constants = {{"lambda1", c.lambda1}, {"lambda2", c.lambda2}, {"p", p}};
    out.one_point.constants = {
        {"gamma1", c.gamma1}, {"lambda2", c.lambda2}, {"eta", c.eta}, {"p", p}};
    detail::TupleSampler sampler(model.d, options);
    for (std::size_t trial = 0; trial < options.trials; ++trial) {
        const auto tuple = sampler.next();
        record(out.two_point,
               dissipativity_margin(model, c, p, tuple.x, tuple.x_prime, tuple.mu, tuple.mu_prime),
               tuple, true);
        record(out.one_point, one_point_dissipativity_margin(model, c, p, tuple.x, tuple.mu), tuple,
               false);
    }
    return out;
}

GrowthConstants estimate_growth_constants(const ModelSpec& model, const CheckOptions& options) {
    GrowthConstants g;
    detail::TupleSampler sampler(model.d, options);
    for (std::size_t trial = 0; trial < options.trials; ++trial) {
        const auto x = sampler.state();
        const auto mu = sampler.cloud();
        const auto c = evaluate(model, x, mu);
        const double r = euclidean_norm(x);
        const double w2 = std::sqrt(mu.second_moment());
        const double b_bound = 1.0 + std::pow(r, model.q + 1.0) + w2;
        const double s_bound = 1.0 + std::pow(r, model.q + 2.0) + w2 * w2;
        const double s = euclidean_norm(c.s), s0 = euclidean_norm(c.s0);
        g.c1 = std::max(g.c1, euclidean_norm(c.b) / b_bound);
        g.c2 = std::max(g.c2, (s * s + s0 * s0) / s_bound);
        ++g.samples;
    }
    return g;
}

namespace detail {

TupleSampler::TupleSampler(std::size_t dim, const CheckOptions& options)
    : dim_(dim), options_(options), rng_(options.seed, 0, domain::kChecker) {
    if (dim_ == 0) throw InvalidArgument("tuple sampler: dimension must be positive");
    if (options_.cloud_size == 0) throw InvalidArgument("tuple sampler: cloud size must be positive");
    if (!(options_.radius > 0.0)) throw InvalidArgument("tuple sampler: radius must be positive");
}

std::vector<double> TupleSampler::state() {
    // Uniform in the closed ball: Gaussian direction, radius r U^{1/d}.
    std::vector<double> v(dim_);
    double norm = 0.0;
    do {
        for (double& c : v) c = rng_.next();
        norm = euclidean_norm(v);
    } while (norm == 0.0);
    const double radius =
        options_.radius * std::pow(rng_.uniform(), 1.0 / static_cast<double>(dim_));
    for (double& c : v) c *= radius / norm;
    return v;
}

EmpiricalMeasure TupleSampler::cloud() {
    std::vector<double> pts;
    pts.reserve(options_.cloud_size * dim_);
    for (std::size_t j = 0; j < options_.cloud_size; ++j) {
        const auto p = state();
        pts.insert(pts.end(), p.begin(), p.end());
    }
    return EmpiricalMeasure(std::move(pts), dim_);
}

SampledTuple TupleSampler::next() {
    const std::uint64_t kind = count_++ % 8;
    auto x = state();
    auto mu = cloud();
    std::vector<double> xp;
    switch (kind) {
        case 0:  // identical inputs
        case 2:  // same state, different measure
            xp = x;
            break;
        case 3: {  // near-diagonal states, where Lipschitz ratios peak
            xp = x;
            const auto dir = state();
            const double scale = 1e-3 * rng_.uniform() / options_.radius;
            for (std::size_t i = 0; i < dim_; ++i) xp[i] += scale * dir[i];
            break;
        }
        default:
            xp = state();
    }
    EmpiricalMeasure mup = (kind == 0 || kind == 1 || kind == 3) ? mu : cloud();
    return {std::move(x), std::move(xp), std::move(mu), std::move(mup)};
}

}  // namespace detail

}  // namespace mkv
