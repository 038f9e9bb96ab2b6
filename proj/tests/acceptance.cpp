// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.
// Lines tagged INFO are diagnostics and never affect the exit status.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "mkv/config.hpp"
#include "mkv/experiment.hpp"
#include "mkv/measure.hpp"
#include "mkv/model.hpp"
#include "mkv/noise.hpp"
#include "mkv/report.hpp"
#include "mkv/stepsize.hpp"

using namespace mkv;

namespace {

int failures = 0;

void verdict(const char* id, bool pass, const std::string& detail, double seconds) {
    std::printf("%-5s %s  %s  [%.1fs]\n", id, pass ? "PASS" : "FAIL", detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

void info(const char* id, const std::string& detail) {
    std::printf("%-5s INFO  %s\n", id, detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    void reset() { start_ = std::chrono::steady_clock::now(); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::uint64_t last) {
    std::vector<std::uint64_t> s(last - first + 1);
    std::iota(s.begin(), s.end(), first);
    return s;
}

PolicyFactory finite_factory(StepFn h, ClampRule clamp) {
    return [h = std::move(h), clamp](double delta) {
        auto p = TimestepPolicy::finite(1.0, delta, h);
        p.clamp = clamp;
        return p;
    };
}

constexpr double kSlopeLo = 0.35, kSlopeHi = 0.65;
constexpr double kStepLo = 0.9, kStepHi = 1.1;

void strong_order_and_step_count(int jobs) {
    struct Case {
        const char* name;
        ModelSpec model;
        StepFn h;
    };
    const Case cases[] = {{"example1", builtin_example_1(), example1_h()},
                          {"example2", builtin_example_2(), example2_h()}};
    StudyConfig study;
    study.n = 1000;
    study.seeds = seed_range(1, 8);
    study.jobs = jobs;

    for (const auto& c : cases) {
        Timer timer;
        const auto r = convergence_study(c.model, finite_factory(c.h, ClampRule::upper), 4, 9, study);
        std::string rmses;
        for (const auto& p : r.pairs) rmses += fmt(" %.4g", p.mean_rmse);
        const bool ok = !r.fit.degenerate && r.fit.slope >= kSlopeLo && r.fit.slope <= kSlopeHi;
        verdict(c.name == std::string("example1") ? "AC1a" : "AC1b", ok,
                fmt("%s strong order: slope %.3f +/- %.3f, band [%.2f, %.2f]; mean RMSE by level 5..9:",
                    c.name, r.fit.slope, r.fit.slope_stderr, kSlopeLo, kSlopeHi) + rmses,
                timer.seconds());
    }
    {
        StudyConfig doubled = study;
        doubled.n = 2000;
        const auto r = convergence_study(cases[0].model, finite_factory(cases[0].h, ClampRule::upper), 4, 9, doubled);
        info("AC1", fmt("example1 with N = 2000: slope %.3f +/- %.3f", r.fit.slope, r.fit.slope_stderr));
        const auto fine = convergence_study(cases[1].model, finite_factory(cases[1].h, ClampRule::upper), 8, 13, study);
        info("AC1", fmt("example2 over levels 8..13: slope %.3f +/- %.3f", fine.fit.slope, fine.fit.slope_stderr));
    }
    for (const auto& c : cases) {
        const auto r = convergence_study(c.model, finite_factory(c.h, ClampRule::proportional), 4, 9, study);
        info("AC1", fmt("%s with proportional clamp delta*min(T, h): slope %.3f +/- %.3f", c.name,
                        r.fit.slope, r.fit.slope_stderr));
    }

    for (const auto& c : cases) {
        Timer timer;
        const auto r = step_count_study(c.model, finite_factory(c.h, ClampRule::upper), 4, 9, study);
        std::string steps;
        for (const auto& l : r.levels) steps += fmt(" %.1f", l.mean_steps);
        const bool ok = !r.fit.degenerate && r.fit.slope >= kStepLo && r.fit.slope <= kStepHi &&
                        r.min_steps_bound;
        verdict(c.name == std::string("example1") ? "AC2a" : "AC2b", ok,
                fmt("%s step count: slope %.3f, band [%.1f, %.1f]; min steps >= 1/delta: %s; implied C %.3f; mean steps by level 4..9:",
                    c.name, r.fit.slope, kStepLo, kStepHi, r.min_steps_bound ? "yes" : "no",
                    r.implied_C) + steps,
                timer.seconds());
    }
    for (const auto& c : cases) {
        const auto r = step_count_study(c.model, finite_factory(c.h, ClampRule::proportional), 4, 9, study);
        info("AC2", fmt("%s with proportional clamp: step slope %.3f, min steps >= 1/delta: %s", c.name,
                        r.fit.slope, r.min_steps_bound ? "yes" : "no"));
    }
}

void finite_horizon_moments(int jobs) {
    Timer timer;
    const auto model = builtin_example_1();
    const auto policy = TimestepPolicy::finite(1.0, 1.0 / 256, example1_h());
    StudyConfig study;
    study.n = 1000;
    study.seeds = seed_range(1, 50);
    study.jobs = jobs;
    std::vector<double> checkpoints;
    for (int k = 1; k < 8; ++k) checkpoints.push_back(k / 8.0);
    const std::vector<double> orders{2.0};
    const auto adaptive = moment_study(model, policy, orders, checkpoints, study);
    const auto reference = fixed_moment_study(
        model, FixedStepScheme{std::ldexp(1.0, -14), kernels::DriftForm::tamed}, orders, checkpoints, study);

    bool ok = adaptive.blowups == 0 && adaptive.rows.size() == reference.rows.size();
    double worst_ratio = 0.0;
    for (std::size_t i = 0; ok && i < adaptive.rows.size(); ++i) {
        const double a = adaptive.rows[i].mean, ref = reference.rows[i].mean;
        if (!std::isfinite(a) || a > 5.0 * ref) ok = false;
        worst_ratio = std::max(worst_ratio, a / ref);
    }
    verdict("AC3", ok,
            fmt("example1 delta=2^-8, N=1000, 50 seeds: %zu blow-ups; max E|X|^2 ratio adaptive/tamed(2^-14) %.4f over t = 0, 1/8, ..., 1 (limit 5)",
                adaptive.blowups, worst_ratio),
            timer.seconds());
}

void uniform_in_time_moments(int jobs) {
    Timer timer;
    const auto model = builtin_example_2();
    const auto policy = TimestepPolicy::infinite(1.0, 1.0 / 64, example2_h());
    StudyConfig study;
    study.n = 1000;
    study.horizon = 50.0;
    study.seeds = seed_range(1, 20);
    study.jobs = jobs;
    const std::vector<double> times{10.0, 25.0, 50.0};
    const std::vector<double> orders{2.0};
    const auto r = moment_study(model, policy, orders, times, study);
    std::vector<MomentRow> rows;
    for (double t : times)
        for (const auto& row : r.rows)
            if (row.t == t) rows.push_back(row);
    bool ok = rows.size() == 3 && r.blowups == 0;
    double worst = 0.0;
    for (std::size_t i = 0; ok && i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            const double z = std::abs(rows[i].mean - rows[j].mean) /
                             std::hypot(rows[i].std_error, rows[j].std_error);
            worst = std::max(worst, z);
        }
    ok = ok && worst <= 3.0;
    std::string detail = "example2 infinite mode, h_max=1, delta=2^-6, N=1000, 20 seeds:";
    for (const auto& row : rows) detail += fmt(" E|X_%g|^2 = %.5f +/- %.5f;", row.t, row.mean, row.std_error);
    verdict("AC4", ok, detail + fmt(" largest pairwise gap %.2f SE (limit 3)", worst), timer.seconds());
}

void clamp_sandwich() {
    Timer timer;
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> unit(0.0, 1.0), coord(-50.0, 50.0);
    const StepFn fns[] = {example1_h(), example2_h()};
    std::size_t violations = 0, trials = 0;
    std::vector<double> cloud(8);
    for (std::size_t k = 0; k < 1000000; ++k) {
        const double x = coord(rng) * std::pow(unit(rng), 3);
        for (auto& v : cloud) v = coord(rng);
        const EmpiricalMeasure mu(cloud, 1);
        const double delta = std::max(unit(rng), 1e-12);
        const double cap = 0.01 + 10.0 * unit(rng);
        const bool infinite = k % 2 == 1;
        auto policy = infinite ? TimestepPolicy::infinite(cap, delta, fns[k % 4 / 2])
                               : TimestepPolicy::finite(cap, delta, fns[k % 4 / 2]);
        policy.clamp = k % 8 < 4 ? ClampRule::upper : ClampRule::proportional;
        const std::vector<double> xs{x};
        const double h = policy.h(xs, mu);
        const double hd = clamp_step(policy, xs, mu);
        const double lower = delta * std::min(cap, h);
        const double upper = std::min(delta * cap, h);
        if (!(hd >= lower && hd <= upper && hd > 0.0)) ++violations;
        ++trials;
    }
    verdict("AC5", violations == 0,
            fmt("%zu random (x, mu, delta) triples over both step functions, modes and clamp rules: %zu violations of delta*min(cap,h) <= h_delta <= min(delta*cap,h)",
                trials, violations),
            timer.seconds());
}

double exhaustive_w2(const std::vector<double>& a, const std::vector<double>& b, std::size_t d) {
    const std::size_t n = a.size() / d;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < d; ++k) cost += std::pow(a[i * d + k] - b[perm[i] * d + k], 2);
        best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt(best / double(n));
}

void wasserstein_oracles() {
    Timer timer;
    std::mt19937_64 rng(77);
    std::normal_distribution<double> normal(0.0, 2.0);
    std::uniform_int_distribution<std::size_t> size(1, 8);
    double worst_1d = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const std::size_t n = size(rng);
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = normal(rng);
        for (auto& v : b) v = normal(rng) + (k % 3);
        const EmpiricalMeasure mu(a, 1), nu(b, 1);
        worst_1d = std::max(worst_1d, std::abs(w2_distance_1d(mu, nu) - w2_distance_assignment(mu, nu)));
    }
    double worst_exhaustive = 0.0;
    std::uniform_int_distribution<std::size_t> small(1, 6), dims(1, 3);
    for (int k = 0; k < 1000; ++k) {
        const std::size_t n = small(rng), d = dims(rng);
        std::vector<double> a(n * d), b(n * d);
        for (auto& v : a) v = normal(rng);
        for (auto& v : b) v = normal(rng);
        const double solver = w2_distance_assignment(EmpiricalMeasure(a, d), EmpiricalMeasure(b, d));
        worst_exhaustive = std::max(worst_exhaustive, std::abs(solver - exhaustive_w2(a, b, d)));
    }
    verdict("AC6", worst_1d <= 1e-12 && worst_exhaustive <= 1e-12,
            fmt("1000 1-d pairs (N <= 8): max |sorted - assignment| = %.2e; 1000 pairs (N <= 6, d <= 3): max |assignment - exhaustive| = %.2e (limit 1e-12)",
                worst_1d, worst_exhaustive),
            timer.seconds());
}

void coupling_exactness() {
    Timer timer;
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    std::size_t compared = 0;
    for (int s = 0; s < 1000; ++s) {
        // random fine grid; coarse grid is a random subset of it, consumed in lockstep
        std::vector<double> fine{0.0};
        while (fine.back() < 1.0) fine.push_back(std::min(1.0, fine.back() + 0.01 + 0.2 * unit(rng)));
        std::vector<double> coarse{0.0};
        for (std::size_t i = 1; i + 1 < fine.size(); ++i)
            if (unit(rng) < 0.3) coarse.push_back(fine[i]);
        coarse.push_back(1.0);

        CoupledGridSession session(NoiseDriver(s, 3, 2, 1));
        const PathId paths[] = {PathId::common(), PathId::particle(0), PathId::particle(2)};
        std::size_t i = 1, j = 1;
        std::vector<std::vector<double>> fine_acc(3, std::vector<double>(2, 0.0));
        while (i < fine.size() || j < coarse.size()) {
            const auto step = lockstep_advance(i < fine.size() ? fine[i] : 2.0,
                                               j < coarse.size() ? coarse[j] : 2.0);
            if (step.fine_steps) {
                for (std::size_t p = 0; p < 3; ++p) {
                    const auto inc = session.increment(0, paths[p], fine[i - 1], fine[i]);
                    for (std::size_t k = 0; k < inc.size(); ++k) fine_acc[p][k] += inc[k];
                }
                ++i;
            }
            if (step.coarse_steps) {
                for (std::size_t p = 0; p < 3; ++p) {
                    const auto inc = session.increment(1, paths[p], coarse[j - 1], coarse[j]);
                    for (std::size_t k = 0; k < inc.size(); ++k) {
                        const double rel = std::abs(inc[k] - fine_acc[p][k]) /
                                           std::max(std::abs(inc[k]), 1e-300);
                        worst = std::max(worst, rel);
                        fine_acc[p][k] = 0.0;
                        ++compared;
                    }
                }
                ++j;
            }
        }
    }

    const auto model = builtin_example_1();
    const auto policy = TimestepPolicy::finite(1.0, 1.0 / 64, example1_h());
    const auto pair = simulate_coupled_pair(model, policy, policy, 500, 1.0, 9);
    const bool identical = pair.fine.states == pair.coarse.states;
    verdict("AC7", worst <= 1e-12 && identical,
            fmt("1000 random coupled sessions, %zu coarse increments: max relative error vs summed fine increments %.2e (limit 1e-12); equal-delta pair bit-identical: %s",
                compared, worst, identical ? "yes" : "no"),
            timer.seconds());
}

void assumption_checkers() {
    Timer timer;
    CheckOptions options;
    options.trials = 100000;
    options.radius = 3.0;
    const auto ex1 = builtin_example_1();
    const auto mono = check_monotonicity(ex1, 2.0, options);
    const auto ex2 = builtin_example_2();
    const auto diss = check_dissipativity(ex2, 2.0, options);
    const double worst_diss = std::max(diss.two_point.worst_margin, diss.one_point.worst_margin);
    verdict("AC8a", mono.passed(1e-9) && diss.two_point.passed(1e-9) && diss.one_point.passed(1e-9),
            fmt("example1 monotonicity (L = %g, radius 3, 1e5 samples) worst margin %.3e; example2 dissipativity worst margin %.3e (limit 1e-9)",
                *ex1.monotone_L, mono.worst_margin, worst_diss),
            timer.seconds());

    timer.reset();
    auto policy = TimestepPolicy::finite(1.0, 1.0 / 256, example1_h(), 1.0);
    policy.lower_bound = LowerBoundWitness{1.0, 1.0, 2.0, 10.0};
    const auto lb = check_lower_bound(policy, 1, options);
    std::string where;
    if (!lb.x.empty()) where = fmt(" at x = %.6g", lb.x.front());
    verdict("AC8b", lb.passed(1e-9),
            fmt("witness (alpha1 = alpha2 = 1, beta = 2, varpi = 10) with C_h = 1 on example1_h: worst margin %.4f%s",
                lb.worst_margin, where.c_str()),
            timer.seconds());
    policy.lower_bound = LowerBoundWitness{192.0, 0.75, 3.75, 10.0};
    const auto own = check_lower_bound(policy, 1, options);
    info("AC8", fmt("project witness (192, 0.75, 3.75, 10) on example1_h: worst margin %.3e", own.worst_margin));
}

void fixed_step_contrast(int jobs) {
    Timer timer;
    StudyConfig study;
    study.n = 100;
    study.seeds = seed_range(1, 20);
    study.jobs = jobs;
    const auto r = fixed_step_comparison(builtin_example_1(),
                                         TimestepPolicy::finite(1.0, 1.0 / 256, example1_h()),
                                         FixedStepScheme{0.25}, study);
    const bool ok = r.adaptive.nonfinite == 0 && r.adaptive.diverged == 0 &&
                    r.fixed.blowup_fraction() > r.adaptive.blowup_fraction();
    verdict("AC9", ok,
            fmt("example1 N=100, 20 seeds: fixed h=2^-2 blow-up fraction %.2f (%zu non-finite, %zu with |X| > %g, max |X| %.3g); adaptive %.2f (max |X| %.3g)",
                r.fixed.blowup_fraction(), r.fixed.nonfinite, r.fixed.diverged,
                r.divergence_threshold, r.fixed.max_abs, r.adaptive.blowup_fraction(),
                r.adaptive.max_abs),
            timer.seconds());
}

struct Rendered {
    std::string csv, json;
    bool operator==(const Rendered&) const = default;
};

Rendered render(const std::string& command, int jobs) {
    RunConfig c;
    c.command = command;
    c.model = command == "moments" ? "example2" : "example1";
    c.n = 200;
    c.level_min = 3;
    c.level_max = 7;
    c.seeds = {1, 2, 3, 5};
    c.p = {2.0, 3.0};
    c.jobs = jobs;
    validate(c);
    const auto model = build_model(c);
    StudyConfig study;
    study.n = c.n;
    study.horizon = c.T;
    study.seeds = c.seeds;
    study.jobs = jobs;
    const PolicyFactory factory = [&](double d) { return build_policy(c, model, d); };
    const auto checkpoints = effective_checkpoints(c);
    if (command == "convergence") {
        const auto r = convergence_study(model, factory, c.level_min, c.level_max, study);
        return {convergence_csv(c, r), convergence_json(c, r)};
    }
    if (command == "steps") {
        const auto r = step_count_study(model, factory, c.level_min, c.level_max, study);
        return {steps_csv(c, r), steps_json(c, r)};
    }
    if (command == "moments") {
        const auto r = moment_study(model, factory(c.delta), c.p, checkpoints, study);
        return {moments_csv(c, r), moments_json(c, r)};
    }
    const auto r = fixed_step_comparison(model, factory(c.delta), FixedStepScheme{c.fixed_h}, study);
    return {compare_fixed_csv(c, r), compare_fixed_json(c, r)};
}

void determinism() {
    Timer timer;
    bool ok = true;
    std::string detail;
    for (const char* command : {"convergence", "steps", "moments", "compare-fixed"}) {
        const auto base = render(command, 1);
        const bool same = base == render(command, 1) && base == render(command, 3) &&
                          base == render(command, 8);
        ok = ok && same;
        detail += fmt(" %s:%s", command, same ? "identical" : "DIFFERS");
    }
    verdict("AC10", ok, "CSV and JSON across reruns and jobs 1/3/8 --" + detail, timer.seconds());
}

}  // namespace

int main(int argc, char** argv) {
    const int jobs = argc > 1 ? std::max(1, std::atoi(argv[1])) : 1;
    std::printf("mkv %s acceptance run (jobs = %d)\n", code_version(), jobs);
    clamp_sandwich();
    wasserstein_oracles();
    coupling_exactness();
    assumption_checkers();
    determinism();
    fixed_step_contrast(jobs);
    uniform_in_time_moments(jobs);
    finite_horizon_moments(jobs);
    strong_order_and_step_count(jobs);
    std::printf("%d criterion line(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
