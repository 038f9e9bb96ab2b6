#include <doctest.h>

#include <cmath>

#include "mkv/assumptions.hpp"
#include "mkv/error.hpp"
#include "test_util.hpp"

using namespace mkv;

namespace {

CheckOptions opts(std::size_t trials, double radius, std::uint64_t seed = 1) {
    CheckOptions o;
    o.trials = trials;
    o.radius = radius;
    o.seed = seed;
    return o;
}

}  // namespace

TEST_CASE("example1 monotonicity holds with L = 2 and the witness re-evaluates") {
    const auto model = builtin_example_1();
    const auto r = check_monotonicity(model, 2.0, opts(10000, 3.0));
    CHECK(r.samples == 10000);
    CHECK(r.worst_margin <= 1e-9);

    // independent evaluation of both sides at the reported witness
    const double x = r.x[0], xp = r.x_prime[0];
    const EmpiricalMeasure mu(r.measure, 1), mup(r.measure_prime, 1);
    const double m = mu.mean()[0], mp = mup.mean()[0];
    const double db = (x - 8 * x * x * x + 0.5 * m) - (xp - 8 * xp * xp * xp + 0.5 * mp);
    const double ds = 0.5 * (x * x + m) - 0.5 * (xp * xp + mp);
    const double w = test::brute_force_w2(r.measure, r.measure_prime, 1);
    const double lhs = (x - xp) * db + (2.0 - 1.0) * (ds * ds + ds * ds);
    const double rhs = 2.0 * ((x - xp) * (x - xp) + w * w);
    CHECK(r.worst_margin == doctest::Approx(lhs - rhs).epsilon(1e-9));
}

TEST_CASE("monotonicity boundary and violation cases") {
    const auto model = builtin_example_1();
    const EmpiricalMeasure mu({0.1, -0.4}, 1);
    CHECK(monotonicity_margin(model, 2.0, 2.0, std::vector{0.7}, std::vector{0.7}, mu, mu) == 0.0);

    const auto expansive = test::scalar_model([](double x, double) { return x; },
                                              [](double, double) { return 0.0; },
                                              [](double, double) { return 0.0; });
    const auto r = check_monotonicity(expansive, 2.0, opts(200, 2.0), 0.0);
    CHECK(r.worst_margin > 0.0);
    CHECK(r.x != r.x_prime);
}

TEST_CASE("monotonicity needs a constant") {
    auto model = builtin_example_1();
    model.monotone_L.reset();
    CHECK_THROWS_AS(check_monotonicity(model, 2.0, opts(10, 1.0)), MissingConstant);
}

TEST_CASE("example1 polynomial Lipschitz constant") {
    const auto model = builtin_example_1();
    // sup of |b(x)-b(x')| / ((1+|x|^2+|x'|^2)|x-x'|) on radius 2 is 95/9 at x = x' = 2
    CHECK(check_polynomial_lipschitz(model, opts(20000, 2.0), 9.0).worst_margin > 0.0);
    CHECK(check_polynomial_lipschitz(model, opts(20000, 2.0), 11.0).worst_margin <= 1e-9);
    CHECK(check_polynomial_lipschitz(model, opts(20000, 3.0)).worst_margin <= 1e-9);
}

TEST_CASE("Lipschitz trivial cases") {
    const auto constant = test::scalar_model([](double, double) { return 3.0; },
                                             [](double, double) { return 0.0; },
                                             [](double, double) { return 0.0; });
    const auto r = check_polynomial_lipschitz(constant, opts(500, 3.0), 0.1);
    CHECK(r.worst_margin <= 0.0);
    const EmpiricalMeasure mu({1.0}, 1);
    CHECK(lipschitz_margin(builtin_example_1(), 9.0, std::vector{1.0}, std::vector{1.0}, mu, mu) ==
          0.0);
}

TEST_CASE("example2 dissipativity") {
    const auto model = builtin_example_2();
    const auto r = check_dissipativity(model, 2.0, opts(20000, 3.0));
    CHECK(r.two_point.worst_margin <= 1e-9);
    CHECK(r.one_point.worst_margin <= 1e-9);
}

TEST_CASE("dissipativity linear cases") {
    const auto zero = [](double, double) { return 0.0; };
    const auto contracting = test::scalar_model([](double x, double) { return -x; }, zero, zero);
    const DissipativityConstants c{1.0, 0.7, 1.0, 0.0};
    const EmpiricalMeasure mu({0.2, 0.9}, 1);
    CHECK(dissipativity_margin(contracting, c, 2.0, std::vector{1.5}, std::vector{-0.5}, mu, mu) ==
          doctest::Approx(0.0));
    CHECK(check_dissipativity(contracting, 2.0, opts(500, 3.0), c).two_point.worst_margin <= 1e-12);
    const auto expanding = test::scalar_model([](double x, double) { return x; }, zero, zero);
    CHECK(check_dissipativity(expanding, 2.0, opts(500, 3.0), c).two_point.worst_margin > 0.0);
    CHECK_THROWS_AS(check_dissipativity(builtin_example_1(), 2.0, opts(10, 1.0)), MissingConstant);
}

TEST_CASE("growth constants are finite and bound the samples") {
    const auto model = builtin_example_1();
    const auto g = estimate_growth_constants(model, opts(5000, 3.0));
    CHECK(std::isfinite(g.c1));
    CHECK(std::isfinite(g.c2));
    CHECK(g.c1 > 0.0);
    CHECK(g.samples == 5000);
}

TEST_CASE("non-finite coefficients name the input") {
    const auto bad = test::scalar_model([](double x, double) { return x > 0.5 ? NAN : 0.0; },
                                        [](double, double) { return 0.0; },
                                        [](double, double) { return 0.0; });
    CHECK_THROWS_AS(check_monotonicity(bad, 2.0, opts(1000, 3.0), 1.0), NumericalBlowup);
}

TEST_CASE("checker sampling is reproducible") {
    const auto model = builtin_example_2();
    const auto a = check_monotonicity(model, 2.0, opts(2000, 3.0, 9));
    const auto b = check_monotonicity(model, 2.0, opts(2000, 3.0, 9));
    CHECK(a.worst_margin == b.worst_margin);
    CHECK(a.x == b.x);
    CHECK(a.worst_margin <= 1e-9);
}
