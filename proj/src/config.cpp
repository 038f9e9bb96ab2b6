#include "mkv/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace mkv {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
    throw ConfigError(key + ": invalid value '" + value + "' (expected " + expected + ")");
}

double parse_double(const std::string& key, const std::string& text) {
    const std::string v = trim(text);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
        bad_value(key, text, "a number");
    }
    return out;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
    const std::string v = trim(text);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
        bad_value(key, text, "a non-negative integer");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string v = trim(text);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, text, "true or false");
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, sep)) parts.push_back(trim(part));
    return parts;
}

std::string join_numbers(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_number(values[i]);
    return out;
}

const char* init_name(InitVariant v) {
    return v == InitVariant::sin_gaussian ? "sin-gaussian" : "deterministic-zero";
}

const char* sigma0_name(CommonDiffusionVariant v) {
    return v == CommonDiffusionVariant::with_one ? "with-one" : "without-one";
}

const char* drift2_name(Example2Drift v) {
    return v == Example2Drift::odd_cubic ? "odd-cubic" : "literal";
}

const char* drift_form_name(kernels::DriftForm f) {
    return f == kernels::DriftForm::plain ? "plain" : "tamed";
}

}  // namespace

std::string format_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::pair<int, int> parse_level_range(const std::string& text) {
    const auto pos = text.find("..");
    if (pos == std::string::npos) {
        throw ConfigError("run.levels: need at least two levels, given as A..B (got '" + text +
                          "')");
    }
    const auto a = parse_unsigned("run.levels", text.substr(0, pos));
    const auto b = parse_unsigned("run.levels", text.substr(pos + 2));
    if (a > 60 || b > 60) bad_value("run.levels", text, "levels between 0 and 60");
    return {static_cast<int>(a), static_cast<int>(b)};
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    for (const auto& part : split(text, ',')) {
        const auto pos = part.find("..");
        if (pos == std::string::npos) {
            seeds.push_back(parse_unsigned("run.seeds", part));
            continue;
        }
        const auto a = parse_unsigned("run.seeds", part.substr(0, pos));
        const auto b = parse_unsigned("run.seeds", part.substr(pos + 2));
        if (b < a || b - a >= 1000000) bad_value("run.seeds", text, "an ascending range A..B");
        for (auto s = a; s <= b; ++s) seeds.push_back(s);
    }
    if (seeds.empty()) bad_value("run.seeds", text, "a non-empty seed list");
    return seeds;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& key) {
    std::vector<double> values;
    if (trim(text).empty()) return values;
    for (const auto& part : split(text, ',')) values.push_back(parse_double(key, part));
    return values;
}

void set_config_value(RunConfig& c, const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    if (key == "run.command") {
        c.command = v;
    } else if (key == "model.name") {
        c.model = v;
    } else if (key == "model.init") {
        if (v == "sin-gaussian") c.init = InitVariant::sin_gaussian;
        else if (v == "deterministic-zero" || v == "zero") c.init = InitVariant::deterministic_zero;
        else bad_value(key, raw, "sin-gaussian or deterministic-zero");
    } else if (key == "model.sigma0") {
        if (v == "with-one") c.sigma0 = CommonDiffusionVariant::with_one;
        else if (v == "without-one") c.sigma0 = CommonDiffusionVariant::without_one;
        else bad_value(key, raw, "with-one or without-one");
    } else if (key == "model.example2_drift") {
        if (v == "odd-cubic") c.example2_drift = Example2Drift::odd_cubic;
        else if (v == "literal") c.example2_drift = Example2Drift::literal;
        else bad_value(key, raw, "odd-cubic or literal");
    } else if (key == "step.h") {
        if (v != "auto" && v != "canonical" && v != "example1" && v != "example2") {
            bad_value(key, raw, "auto, canonical, example1 or example2");
        }
        c.h = v;
    } else if (key == "step.C_h") {
        c.C_h = parse_double(key, v);
    } else if (key == "step.mode") {
        if (v == "finite") c.mode = HorizonMode::finite;
        else if (v == "infinite") c.mode = HorizonMode::infinite;
        else bad_value(key, raw, "finite or infinite");
    } else if (key == "step.T") {
        c.T = parse_double(key, v);
    } else if (key == "step.h_max") {
        c.h_max = parse_double(key, v);
    } else if (key == "step.delta") {
        c.delta = parse_double(key, v);
    } else if (key == "step.clamp") {
        try {
            c.clamp = clamp_rule_from_name(v);
        } catch (const InvalidArgument&) {
            bad_value(key, raw, "upper or proportional");
        }
    } else if (key == "run.n") {
        c.n = parse_unsigned(key, v);
    } else if (key == "run.levels") {
        std::tie(c.level_min, c.level_max) = parse_level_range(v);
    } else if (key == "run.p") {
        c.p = parse_number_list(v, key);
    } else if (key == "run.seeds") {
        c.seeds = parse_seed_list(v);
    } else if (key == "run.checkpoints") {
        c.checkpoints = parse_number_list(v, key);
    } else if (key == "run.timing") {
        c.timing = parse_bool(key, v);
    } else if (key == "fixed.h") {
        c.fixed_h = parse_double(key, v);
    } else if (key == "fixed.drift") {
        if (v == "plain") c.fixed_drift = kernels::DriftForm::plain;
        else if (v == "tamed") c.fixed_drift = kernels::DriftForm::tamed;
        else bad_value(key, raw, "plain or tamed");
    } else if (key == "fixed.divergence_threshold") {
        c.divergence_threshold = parse_double(key, v);
    } else if (key == "check.assumption") {
        c.assumption = v;
    } else if (key == "check.trials") {
        c.trials = parse_unsigned(key, v);
    } else if (key == "check.radius") {
        c.radius = parse_double(key, v);
    } else if (key == "check.L") {
        c.L = parse_double(key, v);
    } else if (key == "check.witness") {
        const auto w = parse_number_list(v, key);
        if (w.size() != 4) bad_value(key, raw, "alpha1,alpha2,beta,varpi");
        c.witness = LowerBoundWitness{w[0], w[1], w[2], w[3]};
    } else {
        throw ConfigError("unknown configuration key '" + key + "'");
    }
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
    std::istringstream in(text);
    std::string line;
    bool embedded = false;
    bool first = true;
    std::string section;
    while (std::getline(in, line)) {
        if (first) {
            first = false;
            embedded = trim(line) == "# mkv-config";
            if (embedded) continue;
        }
        if (embedded) {
            if (line.rfind("# ", 0) != 0) break;
            line = line.substr(2);
        }
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        if (section.empty()) throw ConfigError("key '" + key + "' outside of a [section]");
        set_config_value(base, section + "." + key, line.substr(eq + 1));
    }
    return base;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot read '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    const auto start = text.find_first_not_of(" \t\r\n");
    if (start != std::string::npos && text[start] == '{') {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
        }
        if (!doc.contains("config") || !doc["config"].is_string()) {
            throw ConfigError("config: '" + path + "' has no embedded configuration");
        }
        return parse_config_text(doc["config"].get<std::string>(), std::move(base));
    }
    return parse_config_text(text, std::move(base));
}

std::string config_text(const RunConfig& c) {
    std::ostringstream os;
    os << "[run]\n"
       << "command = " << c.command << "\n"
       << "n = " << c.n << "\n"
       << "levels = " << c.level_min << ".." << c.level_max << "\n"
       << "p = " << join_numbers(c.p) << "\n"
       << "seeds = ";
    for (std::size_t i = 0; i < c.seeds.size(); ++i) os << (i ? "," : "") << c.seeds[i];
    os << "\n"
       << "checkpoints = " << join_numbers(effective_checkpoints(c)) << "\n"
       << "timing = " << (c.timing ? "true" : "false") << "\n"
       << "[model]\n"
       << "name = " << c.model << "\n"
       << "init = " << init_name(c.init) << "\n"
       << "sigma0 = " << sigma0_name(c.sigma0) << "\n"
       << "example2_drift = " << drift2_name(c.example2_drift) << "\n"
       << "[step]\n"
       << "h = " << c.h << "\n"
       << "C_h = " << format_number(c.C_h) << "\n"
       << "mode = " << (c.mode == HorizonMode::finite ? "finite" : "infinite") << "\n"
       << "T = " << format_number(c.T) << "\n"
       << "h_max = " << format_number(c.h_max) << "\n"
       << "delta = " << format_number(c.delta) << "\n"
       << "clamp = " << to_string(c.clamp) << "\n"
       << "[fixed]\n"
       << "h = " << format_number(c.fixed_h) << "\n"
       << "drift = " << drift_form_name(c.fixed_drift) << "\n"
       << "divergence_threshold = " << format_number(c.divergence_threshold) << "\n"
       << "[check]\n"
       << "assumption = " << c.assumption << "\n"
       << "trials = " << c.trials << "\n"
       << "radius = " << format_number(c.radius) << "\n";
    if (c.L) os << "L = " << format_number(*c.L) << "\n";
    if (c.witness) {
        os << "witness = " << join_numbers({c.witness->alpha1, c.witness->alpha2, c.witness->beta,
                                            c.witness->varpi})
           << "\n";
    }
    return os.str();
}

std::vector<double> effective_checkpoints(const RunConfig& c) {
    if (c.checkpoints) return *c.checkpoints;
    return {0.25 * c.T, 0.5 * c.T, 0.75 * c.T};
}

void validate(const RunConfig& c) {
    static const std::vector<std::string> commands{"simulate", "convergence", "steps",
                                                   "moments",  "compare-fixed", "check"};
    if (std::find(commands.begin(), commands.end(), c.command) == commands.end()) {
        throw ConfigError("run.command: unknown command '" + c.command + "'");
    }
    if (c.model.empty()) throw ConfigError("model.name: required (--model example1|example2)");
    if (c.model != "example1" && c.model != "example2") {
        throw ConfigError("model.name: unknown model '" + c.model +
                          "' (expected example1 or example2)");
    }
    if (!(c.T > 0.0) || !std::isfinite(c.T)) throw ConfigError("step.T must be positive");
    if (!(c.h_max > 0.0) || !std::isfinite(c.h_max)) {
        throw ConfigError("step.h_max must be positive");
    }
    if (!(c.delta > 0.0 && c.delta <= 1.0)) throw ConfigError("step.delta must lie in (0, 1]");
    if (!(c.C_h > 0.0) || !std::isfinite(c.C_h)) throw ConfigError("step.C_h must be positive");
    if (c.n == 0) throw ConfigError("run.n must be positive");
    if (c.seeds.empty()) throw ConfigError("run.seeds must not be empty");
    if (c.p.empty()) throw ConfigError("run.p must list at least one moment order");
    for (double p : c.p) {
        if (!(p >= 1.0) || p > 16.0) throw ConfigError("run.p: orders must lie in [1, p_max = 16]");
    }
    for (double t : effective_checkpoints(c)) {
        if (!(t > 0.0 && t < c.T)) throw ConfigError("run.checkpoints must lie inside (0, T)");
    }
    if (c.command == "convergence" || c.command == "steps") {
        if (c.level_max <= c.level_min) {
            throw ConfigError("run.levels: need at least two levels (got " +
                              std::to_string(c.level_min) + ".." + std::to_string(c.level_max) +
                              ")");
        }
        if (c.mode != HorizonMode::finite) {
            throw ConfigError("step.mode: level studies run in finite mode");
        }
        if (std::ceil(std::ldexp(1.0, c.level_min) * c.T) < 2.0) {
            throw ConfigError("run.levels: the coarsest level gives M_l < 2");
        }
    }
    if (c.command == "compare-fixed") {
        if (!(c.fixed_h > 0.0) || !std::isfinite(c.fixed_h)) {
            throw ConfigError("fixed.h must be positive");
        }
        if (!(c.divergence_threshold > 0.0)) {
            throw ConfigError("fixed.divergence_threshold must be positive");
        }
    }
    if (c.command == "check") {
        static const std::vector<std::string> names{"monotonicity", "lipschitz", "dissipativity",
                                                    "lower-bound", "growth"};
        if (std::find(names.begin(), names.end(), c.assumption) == names.end()) {
            throw ConfigError("check.assumption: unknown assumption '" + c.assumption +
                              "' (valid: monotonicity, lipschitz, dissipativity, lower-bound, "
                              "growth)");
        }
        if (c.trials == 0) throw ConfigError("check.trials must be positive");
        if (!(c.radius > 0.0)) throw ConfigError("check.radius must be positive");
    }
}

ModelSpec build_model(const RunConfig& c) {
    BuiltinOptions options;
    options.init = c.init;
    options.sigma0 = c.sigma0;
    options.example2_drift = c.example2_drift;
    return model_by_name(c.model, options);
}

StepFn build_step_fn(const RunConfig& c, const ModelSpec& model) {
    std::string name = c.h;
    if (name == "auto") name = c.model;
    return make_step_fn(step_choice_from_name(name), model, c.C_h);
}

TimestepPolicy build_policy(const RunConfig& c, const ModelSpec& model, double delta) {
    TimestepPolicy policy =
        c.mode == HorizonMode::finite
            ? TimestepPolicy::finite(c.T, delta, build_step_fn(c, model), c.C_h)
            : TimestepPolicy::infinite(c.h_max, delta, build_step_fn(c, model), c.C_h);
    policy.clamp = c.clamp;
    policy.lower_bound = c.witness;
    return policy;
}

}  // namespace mkv
