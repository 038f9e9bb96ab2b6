#include <doctest.h>

#include <cmath>

#include "mkv/engine.hpp"
#include "mkv/error.hpp"
#include "mkv/experiment.hpp"
#include "test_util.hpp"

using namespace mkv;

namespace {

StepFn constant_h(double c) {
    return [c](std::span<const double>, const EmpiricalMeasure&) { return c; };
}

const auto kZero = [](double, double) { return 0.0; };

}  // namespace

TEST_CASE("null dynamics leave the cloud unchanged") {
    const auto model = test::null_model();
    const auto policy = TimestepPolicy::finite(1.0, 0.1, constant_h(1.0));
    const auto r = simulate(model, policy, 50, 1.0, 3);
    CHECK(r.final_cloud.states == initial_cloud(model, 50, 3).states);
    CHECK(r.final_cloud.t == 1.0);
    CHECK(r.final_cloud.step_count == 10);
    CHECK_FALSE(r.blowup.has_value());
    const auto pair = simulate_coupled_pair(model, policy, policy.with_delta(0.5), 20, 1.0, 3);
    CHECK(pair.fine.states == initial_cloud(model, 20, 3).states);
    CHECK(pair.coarse.states == pair.fine.states);
}

TEST_CASE("one step of pure drift") {
    const auto model = test::scalar_model([](double, double) { return 1.0; }, kZero, kZero);
    const auto policy = TimestepPolicy::finite(1.0, 1.0, constant_h(0.5));
    ParticleCloud cloud{1, 1, {0.25}, 0.0, 0};
    CoupledGridSession session(NoiseDriver(1, 1, 1, 1), 1);
    em_step(cloud, model, policy, session, 0, 1.0);
    CHECK(cloud.states[0] == 0.75);
    CHECK(cloud.t == 0.5);
    CHECK(cloud.step_count == 1);
}

TEST_CASE("common noise is shared by every particle") {
    const auto model = test::scalar_model(kZero, kZero, [](double, double) { return 1.0; });
    const auto policy = TimestepPolicy::finite(1.0, 0.125, constant_h(1.0));
    ParticleCloud cloud{3, 1, {0.0, 1.0, -2.0}, 0.0, 0};
    const auto before = cloud.states;
    CoupledGridSession session(NoiseDriver(5, 3, 1, 1), 1);
    em_step(cloud, model, policy, session, 0, 1.0);
    const double inc = cloud.states[0] - before[0];
    CHECK(inc != 0.0);
    CHECK(cloud.states[1] - before[1] == doctest::Approx(inc).epsilon(1e-14));
    CHECK(cloud.states[2] - before[2] == doctest::Approx(inc).epsilon(1e-14));
}

TEST_CASE("all particles read the measure frozen at the start of the step") {
    std::vector<double> seen;
    ModelSpec model = test::scalar_model(kZero, kZero, kZero);
    model.drift = [&seen](std::span<const double>, const EmpiricalMeasure& mu, std::span<double> o) {
        seen.push_back(mu.mean()[0]);
        o[0] = mu.mean()[0];
    };
    const auto policy = TimestepPolicy::finite(1.0, 0.25, constant_h(1.0));
    ParticleCloud cloud{4, 1, {1.0, 2.0, 3.0, 6.0}, 0.0, 0};
    CoupledGridSession session(NoiseDriver(5, 4, 1, 1), 1);
    em_step(cloud, model, policy, session, 0, 1.0);
    REQUIRE(seen.size() == 4);
    for (double m : seen) CHECK(m == 3.0);
    CHECK(cloud.states == std::vector{1.75, 2.75, 3.75, 6.75});
}

TEST_CASE("every executed step is legal") {
    const auto model = builtin_example_1();
    const auto policy = TimestepPolicy::finite(1.0, 1.0 / 32, example1_h());
    EngineOptions options;
    std::size_t steps = 0;
    double last_t = -1.0;
    options.on_step = [&](const StepInfo& s) {
        ++steps;
        CHECK(s.h > 0.0);
        CHECK(s.h <= s.proposed * (1.0 + kLandingSlack));
        CHECK(s.h <= s.remaining);
        CHECK(s.proposed <= policy.delta * policy.cap);
        CHECK(s.t > last_t);
        last_t = s.t;
    };
    RecordPlan plan;
    plan.checkpoints = {0.3, 0.7};
    const auto r = simulate(model, policy, 200, 1.0, 9, plan, options);
    CHECK(r.final_cloud.step_count == steps);
    CHECK(r.final_cloud.step_count >= 32);
    CHECK(r.record.times == std::vector{0.0, 0.3, 0.7, 1.0});
    CHECK(r.record.steps.back() == steps);
}

TEST_CASE("the proposed step is the minimum clamp over particles") {
    const auto model = builtin_example_1();
    const auto policy = TimestepPolicy::finite(1.0, 0.5, example1_h());
    ParticleCloud cloud{3, 1, {0.0, 1.0, -0.5}, 0.0, 0};
    const auto mu = cloud.measure();
    double expected = 1.0;
    for (std::size_t i = 0; i < 3; ++i) expected = std::min(expected, clamp_step(policy, cloud.point(i), mu));
    CHECK(propose_step(cloud, mu, policy) == expected);
    CHECK(next_grid_time(0.9, 0.2, 1.0) == 1.0);
    CHECK(next_grid_time(0.5, 0.2, 1.0) == 0.7);
    CHECK(next_grid_time(0.5, 0.5 - 1e-14, 1.0) == 1.0);
    CHECK(next_grid_time(0.5, 0.49, 1.0) == 0.99);
}

TEST_CASE("simulation is reproducible and backend independent") {
    const auto model = builtin_example_1();
    const auto policy = TimestepPolicy::finite(1.0, 1.0 / 64, example1_h());
    const auto a = simulate(model, policy, 700, 1.0, 21);
    const auto b = simulate(model, policy, 700, 1.0, 21);
    EngineOptions par;
    par.exec = {Backend::parallel, 3};
    const auto c = simulate(model, policy, 700, 1.0, 21, {}, par);
    CHECK(a.final_cloud.states == b.final_cloud.states);
    CHECK(a.final_cloud.states == c.final_cloud.states);
    CHECK(a.record.moments == c.record.moments);
    const auto d = simulate(model, policy, 700, 1.0, 22);
    CHECK(a.final_cloud.states != d.final_cloud.states);
}

TEST_CASE("equal-delta coupled pair is bit-identical to a single run") {
    const auto model = builtin_example_2();
    const auto policy = TimestepPolicy::finite(1.0, 1.0 / 16, example2_h());
    const auto pair = simulate_coupled_pair(model, policy, policy, 300, 1.0, 4);
    CHECK(pair.fine.states == pair.coarse.states);
    CHECK(pair.fine.states == simulate(model, policy, 300, 1.0, 4).final_cloud.states);
    CHECK_THROWS_AS(simulate_coupled_pair(model, policy.with_delta(0.5), policy, 10, 1.0, 4),
                    InvalidArgument);
}

TEST_CASE("coupled runs see the same Brownian paths") {
    // Pure additive noise: X_T - X_0 = W_T for both levels whatever the grids.
    const auto model = test::scalar_model(kZero, [](double, double) { return 1.0; },
                                          [](double, double) { return 1.0; });
    const auto fine = TimestepPolicy::finite(1.0, 1.0 / 12, constant_h(1.0));
    const auto coarse = TimestepPolicy::finite(1.0, 1.0 / 5, constant_h(1.0));
    const auto pair = simulate_coupled_pair(model, fine, coarse, 40, 1.0, 8);
    CHECK(pair.fine.step_count >= 12);
    CHECK(pair.coarse.step_count >= 5);
    for (std::size_t i = 0; i < 40; ++i) {
        CHECK(pair.fine.states[i] == doctest::Approx(pair.coarse.states[i]).epsilon(1e-12));
    }
    CHECK(pair.merged_intervals < pair.fine.step_count + pair.coarse.step_count);
    CHECK(pair.merged_intervals > pair.fine.step_count);
}

TEST_CASE("finer levels are closer: majority of seeds") {
    const auto model = builtin_example_1();
    const auto policy = TimestepPolicy::finite(1.0, 1.0, example1_h());
    int closer = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto fine = simulate_coupled_pair(model, policy.with_delta(1.0 / 64),
                                                policy.with_delta(1.0 / 32), 1000, 1.0, seed);
        const auto coarse = simulate_coupled_pair(model, policy.with_delta(1.0 / 16),
                                                  policy.with_delta(1.0 / 8), 1000, 1.0, seed);
        const double r_fine = rmse(fine.fine, fine.coarse);
        const double r_coarse = rmse(coarse.fine, coarse.coarse);
        CHECK(r_fine > 0.0);
        closer += r_fine < r_coarse ? 1 : 0;
    }
    CHECK(closer > 10);
}

TEST_CASE("non-finite states raise or are recorded") {
    // dX = X^3 dt explodes in finite time; h is fixed so nothing tames it
    const auto model = test::scalar_model([](double x, double) { return x * x * x; }, kZero, kZero);
    const auto policy = TimestepPolicy::finite(1.0, 0.5, constant_h(1.0));
    ParticleCloud cloud{2, 1, {0.0, 1e150}, 0.0, 0};
    CoupledGridSession session(NoiseDriver(1, 2, 1, 1), 1);
    try {
        em_step(cloud, model, policy, session, 0, 1.0);
        FAIL("expected NumericalBlowup");
    } catch (const NumericalBlowup& e) {
        CHECK(e.particle() == 1);
        CHECK(e.time() == 0.0);
    }

    FixedStepScheme scheme{0.5};
    auto m2 = model;
    m2.initial_sampler = [](NormalStream&, std::span<double> out) { out[0] = 1e120; };
    EngineOptions permissive;
    permissive.permissive = true;
    const auto r = simulate_fixed(m2, scheme, 3, 1.0, 1, {}, permissive);
    REQUIRE(r.blowup.has_value());
    CHECK(r.blowup->particle == 0);
    CHECK(std::isinf(r.max_abs));
    CHECK_THROWS_AS(simulate_fixed(m2, scheme, 3, 1.0, 1), NumericalBlowup);
}

TEST_CASE("fixed-step grid lands on checkpoints") {
    const auto model = test::null_model();
    RecordPlan plan;
    plan.checkpoints = {0.3};
    std::vector<double> times;
    EngineOptions options;
    options.on_step = [&](const StepInfo& s) { times.push_back(s.t + s.h); };
    const auto r = simulate_fixed(model, FixedStepScheme{0.25}, 4, 1.0, 1, plan, options);
    CHECK(times == std::vector{0.25, 0.3, 0.5, 0.75, 1.0});
    CHECK(r.record.times == std::vector{0.0, 0.3, 1.0});
}

TEST_CASE("infinite mode lands on checkpoints and the observation horizon") {
    const auto model = builtin_example_2();
    const auto policy = TimestepPolicy::infinite(1.0, 1.0 / 8, example2_h());
    RecordPlan plan;
    plan.checkpoints = {2.5, 5.0};
    plan.moment_orders = {2.0, 4.0};
    const auto r = simulate(model, policy, 100, 6.0, 2, plan);
    CHECK(r.record.times == std::vector{0.0, 2.5, 5.0, 6.0});
    CHECK(r.record.moments.size() == 4);
    CHECK(r.record.moments[0].size() == 2);
    CHECK(r.final_cloud.step_count >= 48);
}

TEST_CASE("different system sizes share paths particle by particle") {
    const auto model = builtin_example_1();
    const auto policy = TimestepPolicy::finite(1.0, 1.0 / 32, example1_h());
    CHECK(cross_n_difference(model, policy, 50, 50, 1.0, 3) == 0.0);
    const double d = cross_n_difference(model, policy, 50, 400, 1.0, 3);
    CHECK(d > 0.0);
    CHECK(d < 0.5);
}

TEST_CASE("run validation") {
    const auto model = builtin_example_1();
    const auto policy = TimestepPolicy::finite(1.0, 0.5, example1_h());
    CHECK_THROWS_AS(simulate(model, policy, 0, 1.0, 1), InvalidArgument);
    CHECK_THROWS_AS(simulate(model, policy, 5, -1.0, 1), InvalidArgument);
    EngineOptions tight;
    tight.max_steps = 3;
    CHECK_THROWS_AS(simulate(model, policy.with_delta(0.01), 5, 1.0, 1, {}, tight), Error);
}
