#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mkv/engine.hpp"
#include "mkv/model.hpp"
#include "mkv/stepsize.hpp"

namespace mkv {

// Level l of the refinement ladder: M_l = ceil(2^l T), delta_l = 1 / M_l.
struct LevelSpec {
    int level;
    std::uint64_t M;
    double delta;
};

// Throws InvalidArgument when M_l < 2.
LevelSpec make_level(int level, double horizon);

// sqrt((1/N) sum_i |x_i^fine - x_i^coarse|^2) over index-matched particles.
double rmse(const ParticleCloud& fine, const ParticleCloud& coarse);
double rmse(std::span<const double> fine, std::span<const double> coarse, std::size_t dim);

// Ordinary least squares y = intercept + slope x.
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    std::size_t points = 0;
    bool degenerate = true;  // < 2 points, non-finite data or zero spread in x
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// Builds the timestep policy used at a given delta.
using PolicyFactory = std::function<TimestepPolicy(double delta)>;

struct StudyConfig {
    std::size_t n = 1000;
    double horizon = 1.0;
    std::vector<std::uint64_t> seeds{1};
    int jobs = 1;
    // wall_ms columns stay 0 unless set, so reports are reproducible bit-for-bit.
    bool record_wall_time = false;
};

struct ConvergenceRow {
    int level;
    double delta;
    std::uint64_t seed;
    double rmse;
    std::uint64_t steps_fine;
    std::uint64_t steps_coarse;
    double wall_ms;
};

struct ConvergencePair {
    int level;
    double delta;
    double mean_rmse;
    double mean_steps_fine;
    double mean_steps_coarse;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;   // canonical order: level, then seed
    std::vector<ConvergencePair> pairs;
    LinearFit fit;                      // log mean RMSE vs log delta
    std::vector<double> per_seed_slopes;
    bool degenerate = true;
};

// Level pairs (l, l-1) for l in (level_min, level_max].
ConvergenceReport convergence_study(const ModelSpec& model, const PolicyFactory& policy,
                                    int level_min, int level_max, const StudyConfig& config);

struct StepCountRow {
    int level;
    double delta;
    std::uint64_t seed;
    std::uint64_t steps;
    double wall_ms;
};

struct StepCountLevel {
    int level;
    double delta;
    double mean_steps;
    std::uint64_t min_steps;
};

struct StepCountReport {
    std::vector<StepCountRow> rows;
    std::vector<StepCountLevel> levels;
    LinearFit fit;             // log mean steps vs log (1/delta)
    double implied_C = 0.0;    // max_l delta_l * mean steps_l
    bool min_steps_bound = true;  // every run took >= 1/delta steps (finite mode)
};

StepCountReport step_count_study(const ModelSpec& model, const PolicyFactory& policy,
                                 int level_min, int level_max, const StudyConfig& config);

struct MomentRow {
    double t;
    double p;
    double mean;
    double std_error;
    std::size_t seeds;
};

struct MomentReport {
    std::vector<MomentRow> rows;  // canonical order: time, then p
    std::vector<std::uint64_t> steps;  // per seed, total steps
    std::size_t blowups = 0;
};

// Empirical E|X_t|^p at the checkpoints (and 0, horizon). Standard errors are
// across seeds; with a single seed they fall back to the particle spread.
MomentReport moment_study(const ModelSpec& model, const TimestepPolicy& policy,
                          std::span<const double> orders, std::span<const double> checkpoints,
                          const StudyConfig& config);

// Same statistics for a uniform-step scheme (reference runs).
MomentReport fixed_moment_study(const ModelSpec& model, const FixedStepScheme& scheme,
                                std::span<const double> orders,
                                std::span<const double> checkpoints, const StudyConfig& config);

struct SchemeOutcome {
    std::size_t runs = 0;
    std::size_t nonfinite = 0;  // runs with a non-finite state before the horizon
    std::size_t diverged = 0;   // non-finite, or |X| above the divergence threshold
    double max_abs = 0.0;
    double terminal_second_moment = 0.0;  // mean over finite runs
    double terminal_stderr = 0.0;

    double nonfinite_fraction() const { return runs ? double(nonfinite) / double(runs) : 0.0; }
    double blowup_fraction() const { return runs ? double(diverged) / double(runs) : 0.0; }
};

struct FixedStepComparison {
    double h;
    double divergence_threshold;
    SchemeOutcome fixed;
    SchemeOutcome adaptive;
};

FixedStepComparison fixed_step_comparison(const ModelSpec& model, const TimestepPolicy& adaptive,
                                          const FixedStepScheme& scheme, const StudyConfig& config,
                                          double divergence_threshold = 1e6);

// Propagation-of-chaos diagnostic: systems of size n_small and n_large driven
// by the same paths (particle i shares W^i and X_0 in both); RMSE over the
// first n_small particles at the horizon.
double cross_n_difference(const ModelSpec& model, const TimestepPolicy& policy,
                          std::size_t n_small, std::size_t n_large, double horizon,
                          std::uint64_t seed, const EngineOptions& options = {});

namespace detail {

// Runs task(i) for i in [0, count) on `jobs` workers; results are stored by
// index so the outcome does not depend on scheduling. Rethrows the exception
// of the lowest failing index.
void run_indexed(std::size_t count, int jobs, const std::function<void(std::size_t)>& task);

}  // namespace detail

}  // namespace mkv
