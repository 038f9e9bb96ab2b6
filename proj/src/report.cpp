#include "mkv/report.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

#ifndef MKV_VERSION
#define MKV_VERSION "unknown"
#endif

namespace mkv {

namespace {

using nlohmann::json;

std::string num(double v) { return format_number(v); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json fit_json(const LinearFit& fit, const double band[2]) {
    json j;
    j["slope"] = number_or_null(fit.slope);
    j["slope_stderr"] = number_or_null(fit.slope_stderr);
    j["intercept"] = number_or_null(fit.intercept);
    j["points"] = fit.points;
    j["degenerate"] = fit.degenerate;
    j["confidence_95"] = {number_or_null(fit.slope - 1.96 * fit.slope_stderr),
                          number_or_null(fit.slope + 1.96 * fit.slope_stderr)};
    j["acceptance_band"] = {band[0], band[1]};
    j["within_band"] = !fit.degenerate && fit.slope >= band[0] && fit.slope <= band[1];
    return j;
}

json envelope(const RunConfig& config) {
    json j;
    j["command"] = config.command;
    j["version"] = code_version();
    j["seeds"] = config.seeds;
    j["config"] = config_text(config);
    return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json outcome_json(const SchemeOutcome& o) {
    return {{"runs", o.runs},
            {"nonfinite", o.nonfinite},
            {"diverged", o.diverged},
            {"nonfinite_fraction", o.nonfinite_fraction()},
            {"blowup_fraction", o.blowup_fraction()},
            {"max_abs", number_or_null(o.max_abs)},
            {"terminal_second_moment", number_or_null(o.terminal_second_moment)},
            {"terminal_stderr", number_or_null(o.terminal_stderr)}};
}

}  // namespace

const char* code_version() noexcept { return MKV_VERSION; }

std::string embedded_config_header(const RunConfig& config) {
    std::ostringstream os;
    os << "# mkv-config\n";
    std::istringstream lines(config_text(config));
    std::string line;
    while (std::getline(lines, line)) os << "# " << line << "\n";
    os << "# # mkv " << code_version() << "\n";
    return os.str();
}

std::string simulate_csv(const RunConfig& config, const SimulateOutput& output) {
    std::ostringstream os;
    os << embedded_config_header(config) << "seed,t,steps,p,moment\n";
    for (std::size_t s = 0; s < output.runs.size(); ++s) {
        const auto& rec = output.runs[s].record;
        for (std::size_t k = 0; k < rec.times.size(); ++k) {
            for (std::size_t j = 0; j < config.p.size(); ++j) {
                os << output.seeds[s] << ',' << num(rec.times[k]) << ',' << rec.steps[k] << ','
                   << num(config.p[j]) << ',' << num(rec.moments[k][j]) << "\n";
            }
        }
    }
    return os.str();
}

std::string simulate_json(const RunConfig& config, const SimulateOutput& output) {
    json j = envelope(config);
    j["runs"] = json::array();
    for (std::size_t s = 0; s < output.runs.size(); ++s) {
        const auto& r = output.runs[s];
        j["runs"].push_back({{"seed", output.seeds[s]},
                             {"steps", r.final_cloud.step_count},
                             {"final_time", r.final_cloud.t},
                             {"max_abs", number_or_null(r.max_abs)}});
    }
    return dump(j);
}

std::string convergence_csv(const RunConfig& config, const ConvergenceReport& report) {
    std::ostringstream os;
    os << embedded_config_header(config) << "l,delta,rmse,steps_fine,steps_coarse,wall_ms,seed\n";
    for (const auto& r : report.rows) {
        os << r.level << ',' << num(r.delta) << ',' << num(r.rmse) << ',' << r.steps_fine << ','
           << r.steps_coarse << ',' << num(r.wall_ms) << ',' << r.seed << "\n";
    }
    return os.str();
}

std::string convergence_json(const RunConfig& config, const ConvergenceReport& report) {
    json j = envelope(config);
    j["fit"] = fit_json(report.fit, kConvergenceBand);
    j["degenerate"] = report.degenerate;
    j["pairs"] = json::array();
    for (const auto& p : report.pairs) {
        j["pairs"].push_back({{"l", p.level},
                              {"delta", p.delta},
                              {"mean_rmse", p.mean_rmse},
                              {"mean_steps_fine", p.mean_steps_fine},
                              {"mean_steps_coarse", p.mean_steps_coarse}});
    }
    j["per_seed_slopes"] = json::array();
    for (double s : report.per_seed_slopes) j["per_seed_slopes"].push_back(number_or_null(s));
    return dump(j);
}

std::string steps_csv(const RunConfig& config, const StepCountReport& report) {
    std::ostringstream os;
    os << embedded_config_header(config) << "l,delta,steps,wall_ms,seed\n";
    for (const auto& r : report.rows) {
        os << r.level << ',' << num(r.delta) << ',' << r.steps << ',' << num(r.wall_ms) << ','
           << r.seed << "\n";
    }
    return os.str();
}

std::string steps_json(const RunConfig& config, const StepCountReport& report) {
    json j = envelope(config);
    j["fit"] = fit_json(report.fit, kStepCountBand);
    j["implied_C"] = report.implied_C;
    j["min_steps_bound"] = report.min_steps_bound;
    j["levels"] = json::array();
    for (const auto& l : report.levels) {
        j["levels"].push_back({{"l", l.level},
                               {"delta", l.delta},
                               {"mean_steps", l.mean_steps},
                               {"min_steps", l.min_steps}});
    }
    return dump(j);
}

std::string moments_csv(const RunConfig& config, const MomentReport& report) {
    std::ostringstream os;
    os << embedded_config_header(config) << "t,p,mean,stderr,seeds\n";
    for (const auto& r : report.rows) {
        os << num(r.t) << ',' << num(r.p) << ',' << num(r.mean) << ',' << num(r.std_error) << ','
           << r.seeds << "\n";
    }
    return os.str();
}

std::string moments_json(const RunConfig& config, const MomentReport& report) {
    json j = envelope(config);
    j["steps"] = report.steps;
    j["blowups"] = report.blowups;
    j["rows"] = json::array();
    for (const auto& r : report.rows) {
        j["rows"].push_back({{"t", r.t},
                             {"p", r.p},
                             {"mean", number_or_null(r.mean)},
                             {"stderr", number_or_null(r.std_error)},
                             {"seeds", r.seeds}});
    }
    return dump(j);
}

std::string compare_fixed_csv(const RunConfig& config, const FixedStepComparison& report) {
    std::ostringstream os;
    os << embedded_config_header(config)
       << "scheme,runs,nonfinite,diverged,max_abs,terminal_second_moment,terminal_stderr\n";
    const auto row = [&](const char* name, const SchemeOutcome& o) {
        os << name << ',' << o.runs << ',' << o.nonfinite << ',' << o.diverged << ','
           << num(o.max_abs) << ',' << num(o.terminal_second_moment) << ','
           << num(o.terminal_stderr) << "\n";
    };
    row("fixed", report.fixed);
    row("adaptive", report.adaptive);
    return os.str();
}

std::string compare_fixed_json(const RunConfig& config, const FixedStepComparison& report) {
    json j = envelope(config);
    j["h"] = report.h;
    j["divergence_threshold"] = report.divergence_threshold;
    j["fixed"] = outcome_json(report.fixed);
    j["adaptive"] = outcome_json(report.adaptive);
    return dump(j);
}

std::string assumption_text(const AssumptionReport& report) {
    std::ostringstream os;
    os.precision(17);
    os << report.assumption << ": worst margin " << report.worst_margin << " over "
       << report.samples << " samples (" << (report.passed() ? "holds" : "violated") << ")\n";
    for (const auto& [name, value] : report.constants) os << "  " << name << " = " << value << "\n";
    const auto vec = [&](const char* label, const std::vector<double>& v) {
        if (v.empty()) return;
        os << "  " << label << " =";
        for (double x : v) os << ' ' << x;
        os << "\n";
    };
    vec("x", report.x);
    vec("x'", report.x_prime);
    vec("mu", report.measure);
    vec("mu'", report.measure_prime);
    return os.str();
}

std::string check_json(const RunConfig& config, const std::vector<AssumptionReport>& reports) {
    json j = envelope(config);
    j["reports"] = json::array();
    for (const auto& r : reports) {
        json c = json::object();
        for (const auto& [name, value] : r.constants) c[name] = number_or_null(value);
        j["reports"].push_back({{"assumption", r.assumption},
                                {"samples", r.samples},
                                {"worst_margin", number_or_null(r.worst_margin)},
                                {"holds", r.passed()},
                                {"constants", c},
                                {"witness",
                                 {{"x", r.x},
                                  {"x_prime", r.x_prime},
                                  {"mu", r.measure},
                                  {"mu_prime", r.measure_prime}}}});
    }
    return dump(j);
}

}  // namespace mkv
