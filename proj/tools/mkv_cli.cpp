#include <CLI11.hpp>

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "mkv/assumptions.hpp"
#include "mkv/config.hpp"
#include "mkv/error.hpp"
#include "mkv/experiment.hpp"
#include "mkv/report.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Override {
    CLI::Option* option;
    std::string key;
    std::string value;
};

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw mkv::Error("cannot write " + path.string());
    std::cout << "wrote " << path.string() << "\n";
}

mkv::StudyConfig study_config(const mkv::RunConfig& c) {
    mkv::StudyConfig s;
    s.n = c.n;
    s.horizon = c.T;
    s.seeds = c.seeds;
    s.jobs = c.jobs;
    s.record_wall_time = c.timing;
    return s;
}

void run_simulate(const mkv::RunConfig& c, const std::filesystem::path& out) {
    const auto model = mkv::build_model(c);
    const auto policy = mkv::build_policy(c, model, c.delta);
    mkv::RecordPlan plan;
    plan.checkpoints = mkv::effective_checkpoints(c);
    plan.moment_orders = c.p;
    mkv::SimulateOutput output;
    output.seeds = c.seeds;
    output.runs.resize(c.seeds.size());
    mkv::detail::run_indexed(c.seeds.size(), c.jobs, [&](std::size_t s) {
        output.runs[s] = mkv::simulate(model, policy, c.n, c.T, c.seeds[s], plan);
    });
    write_file(out / "simulate.csv", mkv::simulate_csv(c, output));
    write_file(out / "simulate.json", mkv::simulate_json(c, output));
}

void run_convergence(const mkv::RunConfig& c, const std::filesystem::path& out) {
    const auto model = mkv::build_model(c);
    const mkv::PolicyFactory factory = [&](double delta) {
        return mkv::build_policy(c, model, delta);
    };
    const auto report =
        mkv::convergence_study(model, factory, c.level_min, c.level_max, study_config(c));
    write_file(out / "convergence.csv", mkv::convergence_csv(c, report));
    write_file(out / "convergence.json", mkv::convergence_json(c, report));
    if (report.degenerate) {
        std::cout << "slope: degenerate (zero RMSE)\n";
    } else {
        std::printf("slope %.4f +/- %.4f\n", report.fit.slope, report.fit.slope_stderr);
    }
}

void run_steps(const mkv::RunConfig& c, const std::filesystem::path& out) {
    const auto model = mkv::build_model(c);
    const mkv::PolicyFactory factory = [&](double delta) {
        return mkv::build_policy(c, model, delta);
    };
    const auto report =
        mkv::step_count_study(model, factory, c.level_min, c.level_max, study_config(c));
    write_file(out / "steps.csv", mkv::steps_csv(c, report));
    write_file(out / "steps.json", mkv::steps_json(c, report));
    std::printf("slope %.4f +/- %.4f, implied C %.4g\n", report.fit.slope,
                report.fit.slope_stderr, report.implied_C);
}

void run_moments(const mkv::RunConfig& c, const std::filesystem::path& out) {
    const auto model = mkv::build_model(c);
    const auto policy = mkv::build_policy(c, model, c.delta);
    const auto checkpoints = mkv::effective_checkpoints(c);
    const auto report = mkv::moment_study(model, policy, c.p, checkpoints, study_config(c));
    write_file(out / "moments.csv", mkv::moments_csv(c, report));
    write_file(out / "moments.json", mkv::moments_json(c, report));
}

void run_compare_fixed(const mkv::RunConfig& c, const std::filesystem::path& out) {
    const auto model = mkv::build_model(c);
    const auto policy = mkv::build_policy(c, model, c.delta);
    const auto report = mkv::fixed_step_comparison(
        model, policy, mkv::FixedStepScheme{c.fixed_h, c.fixed_drift}, study_config(c),
        c.divergence_threshold);
    write_file(out / "compare-fixed.csv", mkv::compare_fixed_csv(c, report));
    write_file(out / "compare-fixed.json", mkv::compare_fixed_json(c, report));
    std::printf("blow-up fraction: fixed %.3f, adaptive %.3f\n", report.fixed.blowup_fraction(),
                report.adaptive.blowup_fraction());
}

void run_check(const mkv::RunConfig& c, const std::filesystem::path& out) {
    const auto model = mkv::build_model(c);
    mkv::CheckOptions options;
    options.trials = c.trials;
    options.radius = c.radius;
    options.seed = c.seeds.front();
    std::vector<mkv::AssumptionReport> reports;
    if (c.assumption == "monotonicity") {
        reports.push_back(mkv::check_monotonicity(model, c.p.front(), options, c.L));
    } else if (c.assumption == "lipschitz") {
        reports.push_back(mkv::check_polynomial_lipschitz(model, options, c.L));
    } else if (c.assumption == "dissipativity") {
        const auto r = mkv::check_dissipativity(model, c.p.front(), options);
        reports.push_back(r.two_point);
        reports.push_back(r.one_point);
    } else if (c.assumption == "lower-bound") {
        const auto policy = mkv::build_policy(c, model, c.delta);
        reports.push_back(mkv::check_lower_bound(policy, model.d, options));
    } else {
        const auto g = mkv::estimate_growth_constants(model, options);
        mkv::AssumptionReport r;
        r.assumption = "growth";
        r.samples = g.samples;
        const bool finite = std::isfinite(g.c1) && std::isfinite(g.c2);
        r.worst_margin = finite ? 0.0 : std::numeric_limits<double>::infinity();
        r.constants = {{"C1", g.c1}, {"C2", g.c2}};
        reports.push_back(r);
    }
    for (const auto& r : reports) std::cout << mkv::assumption_text(r);
    write_file(out / ("check-" + c.assumption + ".json"), mkv::check_json(c, reports));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive Euler-Maruyama particle simulator for McKean-Vlasov SDEs"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    int jobs = 0;
    const char* env_out = std::getenv("MKV_OUT_DIR");
    std::string out_dir = env_out && *env_out ? env_out : ".";
    bool timing = false;

    app.add_option("--config", config_path, "Config file, or an output file to re-run");
    app.add_option("--jobs", jobs, "Parallel runs (default: available cores)")->check(CLI::NonNegativeNumber);
    app.add_option("--out", out_dir, "Output directory (default: $MKV_OUT_DIR or .)");
    auto* timing_flag = app.add_flag("--timing", timing, "Record wall_ms (breaks bit-identical output)");

    const std::vector<std::tuple<std::string, std::string, std::string>> flags{
        {"--model", "model.name", "example1 | example2"},
        {"--init", "model.init", "sin-gaussian | deterministic-zero"},
        {"--sigma0", "model.sigma0", "with-one | without-one (example2)"},
        {"--example2-drift", "model.example2_drift", "odd-cubic | literal"},
        {"--h", "step.h", "auto | canonical | example1 | example2"},
        {"--C-h", "step.C_h", "Constant C_h of the canonical timestep function"},
        {"--mode", "step.mode", "finite | infinite"},
        {"--T", "step.T", "Horizon"},
        {"--h-max", "step.h_max", "Step cap in infinite mode"},
        {"--delta", "step.delta", "Clamp parameter in (0, 1]"},
        {"--clamp", "step.clamp", "upper | proportional"},
        {"--n", "run.n", "Particles"},
        {"--levels", "run.levels", "Level range A..B"},
        {"--p", "run.p", "Moment orders, comma separated"},
        {"--seeds", "run.seeds", "Seeds: list and/or ranges, e.g. 1..8"},
        {"--checkpoints", "run.checkpoints", "Recording times, comma separated"},
        {"--fixed-h", "fixed.h", "Uniform step of the comparison scheme"},
        {"--fixed-drift", "fixed.drift", "plain | tamed"},
        {"--divergence-threshold", "fixed.divergence_threshold", "|X| counted as divergence"},
        {"--assumption", "check.assumption",
         "monotonicity | lipschitz | dissipativity | lower-bound | growth"},
        {"--trials", "check.trials", "Sampled tuples"},
        {"--radius", "check.radius", "Sampling radius"},
        {"--L", "check.L", "Constant to test instead of the declared one"},
        {"--witness", "check.witness", "alpha1,alpha2,beta,varpi"},
    };
    // Reserved up front: options bind to the value strings by address.
    std::vector<Override> overrides;
    overrides.reserve(flags.size() + 1);
    for (const auto& [flag, key, help] : flags) {
        overrides.push_back({nullptr, key, {}});
        overrides.back().option = app.add_option(flag, overrides.back().value, help);
    }
    overrides.push_back({nullptr, "run.seeds", {}});
    overrides.back().option = app.add_option("--seed", overrides.back().value, "Single seed");

    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "One run; checkpoint moments as CSV"},
        {"convergence", "Two-level coupled RMSE over a level range"},
        {"steps", "Step counts over a level range"},
        {"moments", "Moment table across seeds"},
        {"compare-fixed", "Blow-up contrast against uniform-step EM"},
        {"check", "Sampling-based assumption checkers"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    mkv::RunConfig config;
    try {
        if (!config_path.empty()) config = mkv::load_config_file(config_path);
        const std::string command = app.get_subcommands().front()->get_name();
        if (!config.command.empty() && config.command != command) {
            throw mkv::ConfigError("run.command: config is for '" + config.command +
                                   "', not '" + command + "'");
        }
        config.command = command;
        for (const auto& o : overrides) {
            if (o.option->count() > 0) mkv::set_config_value(config, o.key, o.value);
        }
        if (timing_flag->count() > 0) config.timing = true;
        config.jobs = jobs > 0 ? jobs : omp_get_num_procs();
        config.out = out_dir;
        mkv::validate(config);
    } catch (const mkv::InvalidArgument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        const std::filesystem::path out(config.out);
        std::filesystem::create_directories(out);
        if (config.command == "simulate") run_simulate(config, out);
        else if (config.command == "convergence") run_convergence(config, out);
        else if (config.command == "steps") run_steps(config, out);
        else if (config.command == "moments") run_moments(config, out);
        else if (config.command == "compare-fixed") run_compare_fixed(config, out);
        else run_check(config, out);
    } catch (const mkv::NumericalBlowup& e) {
        std::cerr << "numerical blow-up: " << e.what() << " (particle " << e.particle()
                  << ", t = " << e.time() << ")\n";
        return kExitRuntime;
    } catch (const mkv::MissingConstant& e) {
        std::cerr << "missing constant: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
