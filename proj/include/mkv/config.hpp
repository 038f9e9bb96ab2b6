#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mkv/error.hpp"
#include "mkv/kernels.hpp"
#include "mkv/model.hpp"
#include "mkv/stepsize.hpp"

namespace mkv {

// Bad key, value or combination in a run configuration. The message names the
// offending key as section.key.
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

struct RunConfig {
    std::string command;

    // [model]
    std::string model;
    InitVariant init = InitVariant::sin_gaussian;
    CommonDiffusionVariant sigma0 = CommonDiffusionVariant::with_one;
    Example2Drift example2_drift = Example2Drift::odd_cubic;

    // [step]
    std::string h = "auto";  // auto picks the model's own timestep function
    double C_h = 1.0;
    HorizonMode mode = HorizonMode::finite;
    double T = 1.0;       // horizon (observation horizon in infinite mode)
    double h_max = 1.0;   // infinite mode cap
    double delta = 1.0 / 256.0;
    ClampRule clamp = ClampRule::upper;

    // [run]
    std::size_t n = 1000;
    int level_min = 4;
    int level_max = 9;
    std::vector<double> p{2.0};
    std::vector<std::uint64_t> seeds{1};
    std::optional<std::vector<double>> checkpoints;  // default: T/4, T/2, 3T/4
    bool timing = false;

    // [fixed] uniform-step comparison scheme
    double fixed_h = 0.25;
    kernels::DriftForm fixed_drift = kernels::DriftForm::plain;
    double divergence_threshold = 1e6;

    // [check]
    std::string assumption;
    std::size_t trials = 100000;
    double radius = 3.0;
    std::optional<double> L;
    std::optional<LowerBoundWitness> witness;

    // Not part of the echoed configuration: neither changes any output byte.
    int jobs = 0;  // 0: all available cores
    std::string out = ".";
};

// Sets section.key from its textual value; throws ConfigError on unknown keys
// or unparsable values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

// Flat "key = value" lines under [section] headers; '#' starts a comment.
// A file whose first line is "# mkv-config" is an output file with an
// embedded configuration: its leading "# " lines are parsed instead. JSON
// summaries are read through their "config" member.
RunConfig parse_config_text(const std::string& text, RunConfig base = {});
RunConfig load_config_file(const std::string& path, RunConfig base = {});

// Canonical text form. parse_config_text(config_text(c)) reproduces c
// (except jobs and out).
std::string config_text(const RunConfig& config);

// Throws ConfigError naming the offending key.
void validate(const RunConfig& config);

std::vector<double> effective_checkpoints(const RunConfig& config);
ModelSpec build_model(const RunConfig& config);
StepFn build_step_fn(const RunConfig& config, const ModelSpec& model);
TimestepPolicy build_policy(const RunConfig& config, const ModelSpec& model, double delta);

// "A..B" and "a,b,c" (seed lists also accept "A..B" ranges).
std::pair<int, int> parse_level_range(const std::string& text);
std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::vector<double> parse_number_list(const std::string& text, const std::string& key);

// %.17g, so values survive a text round trip.
std::string format_number(double value);

}  // namespace mkv
