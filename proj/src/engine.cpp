#include "mkv/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mkv/error.hpp"

namespace mkv {

namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();

void validate_run(const ModelSpec& model, std::size_t n, double horizon) {
    model.validate();
    if (n == 0) throw InvalidArgument("run.n must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw InvalidArgument("step.T must be positive and finite");
    }
}

// Sorted interior checkpoints followed by the horizon.
std::vector<double> landing_targets(const RecordPlan& plan, double horizon) {
    std::vector<double> targets;
    for (double t : plan.checkpoints) {
        if (!std::isfinite(t)) throw InvalidArgument("run.checkpoints must be finite");
        if (t > 0.0 && t < horizon) targets.push_back(t);
    }
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    targets.push_back(horizon);
    return targets;
}

double max_abs_coordinate(std::span<const double> states) {
    double worst = 0.0;
    for (double v : states) {
        const double a = std::abs(v);
        if (!(a <= worst)) worst = a;  // NaN propagates
    }
    return worst;
}

void record_sample(TrajectoryRecord& record, const ParticleCloud& cloud, const RecordPlan& plan,
                   const Exec& exec) {
    record.times.push_back(cloud.t);
    record.steps.push_back(cloud.step_count);
    std::vector<double> row;
    row.reserve(plan.moment_orders.size());
    for (double p : plan.moment_orders) {
        row.push_back(kernels::abs_moment(cloud.states, cloud.d, p, exec));
    }
    record.moments.push_back(std::move(row));
    if (plan.full_snapshots) record.snapshots.push_back(cloud.states);
}

void check_budget(const ParticleCloud& cloud, const EngineOptions& options) {
    if (cloud.step_count >= options.max_steps) {
        throw Error("step budget of " + std::to_string(options.max_steps) +
                    " exhausted at t = " + std::to_string(cloud.t));
    }
}

// Runs `step` until the cloud reaches each landing target, recording as it
// goes. In permissive mode a NumericalBlowup ends the run as an event.
template <class StepToTarget>
SimulationResult drive(ParticleCloud cloud, double horizon, const RecordPlan& plan,
                       const EngineOptions& options, StepToTarget&& step) {
    SimulationResult result;
    result.max_abs = max_abs_coordinate(cloud.states);
    record_sample(result.record, cloud, plan, options.exec);
    try {
        for (double target : landing_targets(plan, horizon)) {
            while (cloud.t < target) {
                check_budget(cloud, options);
                step(cloud, target);
                result.max_abs = std::max(result.max_abs, max_abs_coordinate(cloud.states));
            }
            record_sample(result.record, cloud, plan, options.exec);
        }
    } catch (const NumericalBlowup& e) {
        if (!options.permissive) throw;
        result.blowup = BlowupEvent{e.particle(), e.time(), e.state()};
        result.max_abs = kNever;
    }
    result.final_cloud = std::move(cloud);
    return result;
}

}  // namespace

ParticleCloud initial_cloud(const ModelSpec& model, std::size_t n, std::uint64_t seed) {
    ParticleCloud cloud;
    cloud.n = n;
    cloud.d = model.d;
    cloud.states.resize(n * model.d);
    for (std::size_t i = 0; i < n; ++i) {
        NormalStream rng(seed, static_cast<std::uint32_t>(i), domain::kInitial);
        model.initial_sampler(rng, std::span<double>(cloud.states).subspan(i * model.d, model.d));
    }
    const std::size_t bad = kernels::serial::find_nonfinite(cloud.states);
    if (bad != kernels::npos) {
        throw InvalidArgument("initial sampler produced a non-finite state for particle " +
                              std::to_string(bad / model.d));
    }
    return cloud;
}

double propose_step(const ParticleCloud& cloud, const EmpiricalMeasure& mu,
                    const TimestepPolicy& policy, const Exec& exec) {
    try {
        return kernels::min_step(cloud.states, cloud.d, mu, policy, exec).h;
    } catch (const NumericalBlowup& e) {
        throw NumericalBlowup(e.what(), e.particle(), cloud.t, e.state());
    }
}

// A remainder within kLandingSlack of the proposed step is absorbed into the step that lands,
// so rounding in the accumulated time never produces a sliver step before a checkpoint.
double next_grid_time(double t, double h, double target) noexcept {
    if (target - t <= h * (1.0 + kLandingSlack)) return target;
    return t + h;
}

void advance(ParticleCloud& cloud, const ModelSpec& model, const EmpiricalMeasure& mu,
             double t_next, CoupledGridSession& session, std::size_t consumer,
             kernels::DriftForm drift, const Exec& exec) {
    if (!(t_next > cloud.t)) {
        throw NumericalBlowup("time step underflow at t = " + std::to_string(cloud.t), 0, cloud.t,
                              {});
    }
    std::vector<double> dW(cloud.n * model.m);
    std::vector<double> dW0(model.m0);
    session.draw(consumer, cloud.t, t_next, dW, dW0, exec);
    const double h = t_next - cloud.t;
    const double t_before = cloud.t;
    const std::size_t bad = kernels::em_update(cloud.states, model, mu, h, dW, dW0, drift, exec);
    cloud.t = t_next;
    ++cloud.step_count;
    if (bad != kernels::npos) {
        std::vector<double> state(cloud.point(bad).begin(), cloud.point(bad).end());
        std::ostringstream os;
        os.precision(17);
        os << "non-finite state for particle " << bad << " in step from t = " << t_before;
        throw NumericalBlowup(os.str(), bad, t_before, std::move(state));
    }
}

void em_step(ParticleCloud& cloud, const ModelSpec& model, const TimestepPolicy& policy,
             CoupledGridSession& session, std::size_t consumer, double target,
             const EngineOptions& options) {
    const EmpiricalMeasure mu = cloud.measure();
    const double proposed = propose_step(cloud, mu, policy, options.exec);
    const double t_next = next_grid_time(cloud.t, proposed, target);
    if (options.on_step) options.on_step({cloud.t, t_next - cloud.t, proposed, target - cloud.t});
    advance(cloud, model, mu, t_next, session, consumer, kernels::DriftForm::plain, options.exec);
}

SimulationResult simulate(const ModelSpec& model, const TimestepPolicy& policy, std::size_t n,
                          double horizon, std::uint64_t seed, const RecordPlan& plan,
                          const EngineOptions& options) {
    validate_run(model, n, horizon);
    policy.validate();
    CoupledGridSession session(NoiseDriver(seed, n, model.m, model.m0), 1);
    return drive(initial_cloud(model, n, seed), horizon, plan, options,
                 [&](ParticleCloud& cloud, double target) {
                     em_step(cloud, model, policy, session, 0, target, options);
                 });
}

SimulationResult simulate_fixed(const ModelSpec& model, const FixedStepScheme& scheme,
                                std::size_t n, double horizon, std::uint64_t seed,
                                const RecordPlan& plan, const EngineOptions& options) {
    validate_run(model, n, horizon);
    if (!(scheme.h > 0.0) || !std::isfinite(scheme.h)) {
        throw InvalidArgument("fixed step h must be positive");
    }
    CoupledGridSession session(NoiseDriver(seed, n, model.m, model.m0), 1);
    // Uniform grid points are j*h (no accumulated rounding); checkpoints are
    // merged in as extra landing points.
    std::uint64_t uniform_index = 0;
    return drive(initial_cloud(model, n, seed), horizon, plan, options,
                 [&](ParticleCloud& cloud, double target) {
                     double next_uniform = static_cast<double>(uniform_index + 1) * scheme.h;
                     while (next_uniform <= cloud.t) {
                         ++uniform_index;
                         next_uniform = static_cast<double>(uniform_index + 1) * scheme.h;
                     }
                     const double t_next = std::min(next_uniform, target);
                     if (options.on_step) {
                         options.on_step({cloud.t, t_next - cloud.t, scheme.h, target - cloud.t});
                     }
                     const EmpiricalMeasure mu = cloud.measure();
                     advance(cloud, model, mu, t_next, session, 0, scheme.drift, options.exec);
                 });
}

CoupledResult simulate_coupled_pair(const ModelSpec& model, const TimestepPolicy& fine,
                                    const TimestepPolicy& coarse, std::size_t n, double horizon,
                                    std::uint64_t seed, const EngineOptions& options) {
    if (fine.delta > coarse.delta) {
        throw InvalidArgument("coupled pair: fine delta must not exceed coarse delta");
    }
    return simulate_coupled_systems(model, fine, n, coarse, n, horizon, seed, options);
}

CoupledResult simulate_coupled_systems(const ModelSpec& model, const TimestepPolicy& first,
                                       std::size_t n_first, const TimestepPolicy& second,
                                       std::size_t n_second, double horizon, std::uint64_t seed,
                                       const EngineOptions& options) {
    validate_run(model, std::min(n_first, n_second), horizon);
    first.validate();
    second.validate();
    const std::size_t n = std::max(n_first, n_second);
    CoupledGridSession session(NoiseDriver(seed, n, model.m, model.m0), 2);

    struct Level {
        const TimestepPolicy* policy;
        ParticleCloud cloud;
        std::optional<EmpiricalMeasure> mu;  // snapshot at the current grid point
        double next = kNever;
    };
    Level levels[2] = {{&first, initial_cloud(model, n_first, seed), std::nullopt, kNever},
                       {&second, initial_cloud(model, n_second, seed), std::nullopt, kNever}};

    auto plan = [&](Level& level) {
        if (level.cloud.t >= horizon) {
            level.mu.reset();
            level.next = kNever;
            return;
        }
        check_budget(level.cloud, options);
        level.mu.emplace(level.cloud.measure());
        const double h = propose_step(level.cloud, *level.mu, *level.policy, options.exec);
        level.next = next_grid_time(level.cloud.t, h, horizon);
        if (options.on_step) {
            options.on_step({level.cloud.t, level.next - level.cloud.t, h,
                             horizon - level.cloud.t});
        }
    };
    plan(levels[0]);
    plan(levels[1]);
    while (levels[0].cloud.t < horizon || levels[1].cloud.t < horizon) {
        const auto decision = lockstep_advance(levels[0].next, levels[1].next);
        session.materialize(decision.time);
        const bool steps[2] = {decision.fine_steps, decision.coarse_steps};
        for (std::size_t c = 0; c < 2; ++c) {
            if (!steps[c]) continue;
            advance(levels[c].cloud, model, *levels[c].mu, decision.time, session, c,
                    kernels::DriftForm::plain, options.exec);
            plan(levels[c]);
        }
    }
    return {std::move(levels[0].cloud), std::move(levels[1].cloud),
            session.breakpoints().size() - 1};
}

}  // namespace mkv
