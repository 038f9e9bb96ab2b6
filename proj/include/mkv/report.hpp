#pragma once

#include <string>

#include "mkv/assumptions.hpp"
#include "mkv/config.hpp"
#include "mkv/engine.hpp"
#include "mkv/experiment.hpp"

namespace mkv {

const char* code_version() noexcept;

// Every CSV starts with the embedded configuration ("# mkv-config" followed by
// "# "-prefixed config lines), so load_config_file can read it back.
std::string embedded_config_header(const RunConfig& config);

struct SimulateOutput {
    std::vector<std::uint64_t> seeds;
    std::vector<SimulationResult> runs;
};

std::string simulate_csv(const RunConfig& config, const SimulateOutput& output);
std::string simulate_json(const RunConfig& config, const SimulateOutput& output);

std::string convergence_csv(const RunConfig& config, const ConvergenceReport& report);
std::string convergence_json(const RunConfig& config, const ConvergenceReport& report);

std::string steps_csv(const RunConfig& config, const StepCountReport& report);
std::string steps_json(const RunConfig& config, const StepCountReport& report);

std::string moments_csv(const RunConfig& config, const MomentReport& report);
std::string moments_json(const RunConfig& config, const MomentReport& report);

std::string compare_fixed_csv(const RunConfig& config, const FixedStepComparison& report);
std::string compare_fixed_json(const RunConfig& config, const FixedStepComparison& report);

std::string assumption_text(const AssumptionReport& report);
std::string check_json(const RunConfig& config, const std::vector<AssumptionReport>& reports);

// Acceptance bands the studies are judged against.
inline constexpr double kConvergenceBand[2] = {0.35, 0.65};
inline constexpr double kStepCountBand[2] = {0.9, 1.1};

}  // namespace mkv
