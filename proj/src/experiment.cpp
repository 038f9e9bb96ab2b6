#include "mkv/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>

#include "mkv/error.hpp"

namespace mkv {

namespace {

void validate_study(const StudyConfig& config) {
    if (config.n == 0) throw InvalidArgument("run.n must be positive");
    if (config.seeds.empty()) throw InvalidArgument("run.seeds must not be empty");
    if (!(config.horizon > 0.0)) throw InvalidArgument("step.T must be positive");
}

void validate_levels(int level_min, int level_max) {
    if (level_max <= level_min) {
        throw InvalidArgument("run.levels: need at least two levels (got " +
                              std::to_string(level_min) + ".." + std::to_string(level_max) + ")");
    }
}

class Stopwatch {
public:
    explicit Stopwatch(bool enabled) : enabled_(enabled), start_(Clock::now()) {}
    double elapsed_ms() const {
        if (!enabled_) return 0.0;
        return std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
    }

private:
    using Clock = std::chrono::steady_clock;
    bool enabled_;
    Clock::time_point start_;
};

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Standard error of the mean (sample standard deviation / sqrt(n)).
double stderr_of(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

EngineOptions inner_options(bool permissive = false) {
    EngineOptions options;
    options.permissive = permissive;
    return options;
}

}  // namespace

LevelSpec make_level(int level, double horizon) {
    if (level < 0 || level > 60) throw InvalidArgument("run.levels: level out of range");
    if (!(horizon > 0.0)) throw InvalidArgument("step.T must be positive");
    const double raw = std::ceil(std::ldexp(1.0, level) * horizon);
    if (raw < 2.0) {
        throw InvalidArgument("level " + std::to_string(level) + " gives M_l < 2");
    }
    const auto M = static_cast<std::uint64_t>(raw);
    const double delta = 1.0 / static_cast<double>(M);
    return {level, M, delta};
}

double rmse(std::span<const double> fine, std::span<const double> coarse, std::size_t dim) {
    if (dim == 0 || fine.size() != coarse.size() || fine.size() % dim != 0 || fine.empty()) {
        throw InvalidArgument("rmse: clouds must have equal N and d");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < fine.size(); ++i) {
        const double gap = fine[i] - coarse[i];
        sum += gap * gap;
    }
    return std::sqrt(sum / static_cast<double>(fine.size() / dim));
}

double rmse(const ParticleCloud& fine, const ParticleCloud& coarse) {
    if (fine.n != coarse.n || fine.d != coarse.d) {
        throw InvalidArgument("rmse: clouds must have equal N and d");
    }
    return rmse(fine.states, coarse.states, fine.d);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    LinearFit fit;
    fit.points = x.size();
    if (x.size() != y.size() || x.size() < 2) return fit;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) return fit;
    }
    const double mx = mean_of(x), my = mean_of(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            ssr += r * r;
        }
        fit.slope_stderr = std::sqrt(ssr / static_cast<double>(x.size() - 2) / sxx);
    }
    fit.degenerate = false;
    return fit;
}

namespace detail {

void run_indexed(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
    std::vector<std::exception_ptr> errors(count);
    const auto n = static_cast<std::ptrdiff_t>(count);
    const int workers = std::max(1, jobs);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            task(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace detail

ConvergenceReport convergence_study(const ModelSpec& model, const PolicyFactory& policy,
                                    int level_min, int level_max, const StudyConfig& config) {
    validate_study(config);
    validate_levels(level_min, level_max);
    const std::size_t seeds = config.seeds.size();
    const std::size_t pairs = static_cast<std::size_t>(level_max - level_min);
    ConvergenceReport report;
    report.rows.resize(pairs * seeds);
    detail::run_indexed(report.rows.size(), config.jobs, [&](std::size_t idx) {
        const int level = level_min + 1 + static_cast<int>(idx / seeds);
        const std::uint64_t seed = config.seeds[idx % seeds];
        const LevelSpec fine = make_level(level, config.horizon);
        const LevelSpec coarse = make_level(level - 1, config.horizon);
        Stopwatch watch(config.record_wall_time);
        const auto pair = simulate_coupled_pair(model, policy(fine.delta), policy(coarse.delta),
                                                config.n, config.horizon, seed, inner_options());
        report.rows[idx] = {level,
                            fine.delta,
                            seed,
                            rmse(pair.fine, pair.coarse),
                            pair.fine.step_count,
                            pair.coarse.step_count,
                            watch.elapsed_ms()};
    });

    std::vector<double> log_delta, log_rmse;
    bool any_zero = false;
    for (std::size_t p = 0; p < pairs; ++p) {
        ConvergencePair summary{report.rows[p * seeds].level, report.rows[p * seeds].delta, 0.0,
                                0.0, 0.0};
        for (std::size_t s = 0; s < seeds; ++s) {
            const auto& row = report.rows[p * seeds + s];
            summary.mean_rmse += row.rmse;
            summary.mean_steps_fine += static_cast<double>(row.steps_fine);
            summary.mean_steps_coarse += static_cast<double>(row.steps_coarse);
        }
        summary.mean_rmse /= static_cast<double>(seeds);
        summary.mean_steps_fine /= static_cast<double>(seeds);
        summary.mean_steps_coarse /= static_cast<double>(seeds);
        any_zero = any_zero || !(summary.mean_rmse > 0.0);
        log_delta.push_back(std::log(summary.delta));
        log_rmse.push_back(std::log(summary.mean_rmse));
        report.pairs.push_back(summary);
    }
    if (!any_zero) report.fit = fit_line(log_delta, log_rmse);
    report.degenerate = any_zero || report.fit.degenerate;

    for (std::size_t s = 0; s < seeds; ++s) {
        std::vector<double> y;
        bool ok = true;
        for (std::size_t p = 0; p < pairs; ++p) {
            const double r = report.rows[p * seeds + s].rmse;
            ok = ok && r > 0.0;
            y.push_back(std::log(r));
        }
        const LinearFit f = ok ? fit_line(log_delta, y) : LinearFit{};
        report.per_seed_slopes.push_back(f.degenerate ? std::numeric_limits<double>::quiet_NaN()
                                                      : f.slope);
    }
    return report;
}

StepCountReport step_count_study(const ModelSpec& model, const PolicyFactory& policy,
                                 int level_min, int level_max, const StudyConfig& config) {
    validate_study(config);
    validate_levels(level_min, level_max);
    const std::size_t seeds = config.seeds.size();
    const std::size_t levels = static_cast<std::size_t>(level_max - level_min + 1);
    StepCountReport report;
    report.rows.resize(levels * seeds);
    detail::run_indexed(report.rows.size(), config.jobs, [&](std::size_t idx) {
        const int level = level_min + static_cast<int>(idx / seeds);
        const std::uint64_t seed = config.seeds[idx % seeds];
        const LevelSpec spec = make_level(level, config.horizon);
        Stopwatch watch(config.record_wall_time);
        const auto run = simulate(model, policy(spec.delta), config.n, config.horizon, seed, {},
                                  inner_options());
        report.rows[idx] = {level, spec.delta, seed, run.final_cloud.step_count,
                            watch.elapsed_ms()};
    });

    std::vector<double> log_inv_delta, log_steps;
    for (std::size_t l = 0; l < levels; ++l) {
        StepCountLevel summary{report.rows[l * seeds].level, report.rows[l * seeds].delta, 0.0,
                               std::numeric_limits<std::uint64_t>::max()};
        for (std::size_t s = 0; s < seeds; ++s) {
            const auto steps = report.rows[l * seeds + s].steps;
            summary.mean_steps += static_cast<double>(steps);
            summary.min_steps = std::min(summary.min_steps, steps);
        }
        summary.mean_steps /= static_cast<double>(seeds);
        report.implied_C = std::max(report.implied_C, summary.mean_steps * summary.delta);
        report.min_steps_bound = report.min_steps_bound &&
                                 static_cast<double>(summary.min_steps) >= 1.0 / summary.delta;
        log_inv_delta.push_back(-std::log(summary.delta));
        log_steps.push_back(std::log(summary.mean_steps));
        report.levels.push_back(summary);
    }
    report.fit = fit_line(log_inv_delta, log_steps);
    return report;
}

namespace {

template <class Runner>
MomentReport moment_table(std::span<const double> orders, std::span<const double> checkpoints,
                          const StudyConfig& config, Runner&& run_one) {
    validate_study(config);
    if (orders.empty()) throw InvalidArgument("run.p must list at least one moment order");
    RecordPlan plan;
    plan.checkpoints.assign(checkpoints.begin(), checkpoints.end());
    plan.moment_orders.assign(orders.begin(), orders.end());
    // Single seed: keep the terminal cloud so a particle-spread error can be formed.
    const std::size_t seeds = config.seeds.size();
    std::vector<SimulationResult> runs(seeds);
    detail::run_indexed(seeds, config.jobs, [&](std::size_t s) {
        RecordPlan local = plan;
        local.full_snapshots = seeds == 1;
        runs[s] = run_one(config.seeds[s], local);
    });

    MomentReport report;
    // Blown-up runs stop early; only runs that reached the horizon form the table.
    std::vector<const SimulationResult*> complete;
    for (const auto& r : runs) {
        report.steps.push_back(r.final_cloud.step_count);
        if (r.blowup) {
            ++report.blowups;
        } else {
            complete.push_back(&r);
        }
    }
    if (complete.empty()) return report;
    const auto& times = complete.front()->record.times;
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (std::size_t j = 0; j < orders.size(); ++j) {
            std::vector<double> values;
            for (const auto* r : complete) values.push_back(r->record.moments[k][j]);
            MomentRow row{times[k], orders[j], mean_of(values), stderr_of(values), values.size()};
            if (values.size() == 1) {
                const auto& snapshot = complete.front()->record.snapshots[k];
                const std::size_t d = complete.front()->final_cloud.d;
                std::vector<double> per_particle;
                for (std::size_t i = 0; i < snapshot.size() / d; ++i) {
                    per_particle.push_back(std::pow(
                        euclidean_norm(std::span<const double>(snapshot).subspan(i * d, d)),
                        orders[j]));
                }
                row.std_error = stderr_of(per_particle);
            }
            report.rows.push_back(row);
        }
    }
    return report;
}

}  // namespace

MomentReport moment_study(const ModelSpec& model, const TimestepPolicy& policy,
                          std::span<const double> orders, std::span<const double> checkpoints,
                          const StudyConfig& config) {
    for (double p : orders) {
        if (p > model.p_max) {
            throw InvalidArgument("run.p: moment order exceeds the model's p_max");
        }
    }
    return moment_table(orders, checkpoints, config, [&](std::uint64_t seed, const RecordPlan& plan) {
        return simulate(model, policy, config.n, config.horizon, seed, plan, inner_options());
    });
}

MomentReport fixed_moment_study(const ModelSpec& model, const FixedStepScheme& scheme,
                                std::span<const double> orders,
                                std::span<const double> checkpoints, const StudyConfig& config) {
    return moment_table(orders, checkpoints, config, [&](std::uint64_t seed, const RecordPlan& plan) {
        return simulate_fixed(model, scheme, config.n, config.horizon, seed, plan,
                              inner_options(true));
    });
}

namespace {

SchemeOutcome summarise(const std::vector<SimulationResult>& runs, double threshold) {
    SchemeOutcome out;
    std::vector<double> terminal;
    for (const auto& r : runs) {
        ++out.runs;
        const bool nonfinite = r.blowup.has_value();
        out.nonfinite += nonfinite ? 1 : 0;
        out.diverged += (nonfinite || !(r.max_abs <= threshold)) ? 1 : 0;
        if (!(r.max_abs <= out.max_abs)) out.max_abs = r.max_abs;
        if (!nonfinite) terminal.push_back(r.record.moments.back().front());
    }
    out.terminal_second_moment = mean_of(terminal);
    out.terminal_stderr = stderr_of(terminal);
    return out;
}

}  // namespace

FixedStepComparison fixed_step_comparison(const ModelSpec& model, const TimestepPolicy& adaptive,
                                          const FixedStepScheme& scheme, const StudyConfig& config,
                                          double divergence_threshold) {
    validate_study(config);
    if (!(divergence_threshold > 0.0)) {
        throw InvalidArgument("experiment.divergence_threshold must be positive");
    }
    const std::size_t seeds = config.seeds.size();
    std::vector<SimulationResult> fixed(seeds), adapted(seeds);
    const RecordPlan plan;  // second moment at 0 and the horizon
    detail::run_indexed(2 * seeds, config.jobs, [&](std::size_t idx) {
        const std::uint64_t seed = config.seeds[idx % seeds];
        if (idx < seeds) {
            fixed[idx] = simulate_fixed(model, scheme, config.n, config.horizon, seed, plan,
                                        inner_options(true));
        } else {
            adapted[idx - seeds] = simulate(model, adaptive, config.n, config.horizon, seed, plan,
                                            inner_options(true));
        }
    });
    return {scheme.h, divergence_threshold, summarise(fixed, divergence_threshold),
            summarise(adapted, divergence_threshold)};
}

double cross_n_difference(const ModelSpec& model, const TimestepPolicy& policy,
                          std::size_t n_small, std::size_t n_large, double horizon,
                          std::uint64_t seed, const EngineOptions& options) {
    if (n_small > n_large) std::swap(n_small, n_large);
    const auto result =
        simulate_coupled_systems(model, policy, n_small, policy, n_large, horizon, seed, options);
    const std::size_t d = model.d;
    return rmse(std::span<const double>(result.fine.states),
                std::span<const double>(result.coarse.states).subspan(0, n_small * d), d);
}

}  // namespace mkv
