#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mkv/exec.hpp"
#include "mkv/kernels.hpp"
#include "mkv/measure.hpp"
#include "mkv/model.hpp"
#include "mkv/noise.hpp"
#include "mkv/stepsize.hpp"

namespace mkv {

// N x d particle states on the shared global grid.
struct ParticleCloud {
    std::size_t n = 0;
    std::size_t d = 1;
    std::vector<double> states;
    double t = 0.0;
    std::uint64_t step_count = 0;

    std::span<const double> point(std::size_t i) const noexcept {
        return {states.data() + i * d, d};
    }
    EmpiricalMeasure measure() const { return EmpiricalMeasure(states, d); }
};

// Per-step diagnostics passed to EngineOptions::on_step.
struct StepInfo {
    double t;          // grid time before the step
    double h;          // executed step
    double proposed;   // min_i h^delta(x_i, mu) (or the fixed step)
    double remaining;  // target - t
};

struct EngineOptions {
    Exec exec;
    // Record non-finite states as a blow-up event instead of throwing.
    bool permissive = false;
    std::uint64_t max_steps = std::uint64_t{1} << 26;
    std::function<void(const StepInfo&)> on_step;
};

struct BlowupEvent {
    std::size_t particle;
    double t;
    std::vector<double> state;
};

// X_0^i drawn from model.initial_sampler with a stream keyed by (seed, i).
ParticleCloud initial_cloud(const ModelSpec& model, std::size_t n, std::uint64_t seed);

// Smallest per-particle h^delta under the current empirical measure.
double propose_step(const ParticleCloud& cloud, const EmpiricalMeasure& mu,
                    const TimestepPolicy& policy, const Exec& exec = {});

// Relative tolerance for absorbing a rounding remainder into the landing step.
inline constexpr double kLandingSlack = 1e-9;

// Next grid time from t with proposed step h, landing exactly on `target`
// when the remaining time is at most h * (1 + kLandingSlack).
double next_grid_time(double t, double h, double target) noexcept;

// Advances the cloud to t_next using increments drawn from `session` for
// `consumer` over [cloud.t, t_next]. All particles read the same snapshot mu.
// Throws NumericalBlowup on a non-finite state.
void advance(ParticleCloud& cloud, const ModelSpec& model, const EmpiricalMeasure& mu,
             double t_next, CoupledGridSession& session, std::size_t consumer,
             kernels::DriftForm drift, const Exec& exec);

// One adaptive Euler-Maruyama step towards `target`.
void em_step(ParticleCloud& cloud, const ModelSpec& model, const TimestepPolicy& policy,
             CoupledGridSession& session, std::size_t consumer, double target,
             const EngineOptions& options = {});

struct RecordPlan {
    // Interior checkpoint times; 0 and the horizon are always recorded.
    std::vector<double> checkpoints;
    std::vector<double> moment_orders{2.0};
    bool full_snapshots = false;
};

// Sample times with E|X_t|^p per configured p; snapshots only when requested.
struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<std::vector<double>> moments;  // [time][order]
    std::vector<std::uint64_t> steps;          // steps completed at each time
    std::vector<std::vector<double>> snapshots;
};

struct SimulationResult {
    TrajectoryRecord record;
    ParticleCloud final_cloud;
    std::optional<BlowupEvent> blowup;
    double max_abs = 0.0;  // largest |X^i_t| coordinate seen on the grid
};

SimulationResult simulate(const ModelSpec& model, const TimestepPolicy& policy, std::size_t n,
                          double horizon, std::uint64_t seed, const RecordPlan& plan = {},
                          const EngineOptions& options = {});

// Uniform-step Euler-Maruyama (plain or drift-tamed), used as comparison and
// reference scheme.
struct FixedStepScheme {
    double h;
    kernels::DriftForm drift = kernels::DriftForm::plain;
};

SimulationResult simulate_fixed(const ModelSpec& model, const FixedStepScheme& scheme,
                                std::size_t n, double horizon, std::uint64_t seed,
                                const RecordPlan& plan = {}, const EngineOptions& options = {});

struct CoupledResult {
    ParticleCloud fine;
    ParticleCloud coarse;
    std::size_t merged_intervals = 0;
};

// Fine and coarse systems integrated in lockstep on the merged grid, so both
// see the identical W^i and W^0 and start from the same X_0.
CoupledResult simulate_coupled_pair(const ModelSpec& model, const TimestepPolicy& fine,
                                    const TimestepPolicy& coarse, std::size_t n, double horizon,
                                    std::uint64_t seed, const EngineOptions& options = {});

// Two systems (possibly of different size) on one merged grid. Particle i of
// either system uses W^i and X_0^i of the shared driver.
CoupledResult simulate_coupled_systems(const ModelSpec& model, const TimestepPolicy& first,
                                       std::size_t n_first, const TimestepPolicy& second,
                                       std::size_t n_second, double horizon, std::uint64_t seed,
                                       const EngineOptions& options = {});

}  // namespace mkv
