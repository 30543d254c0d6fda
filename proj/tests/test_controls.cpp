#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "locmono/controls.hpp"
#include "locmono/errors.hpp"
#include "locmono/rng.hpp"

using namespace locmono;
using locmono::testing::random_vector;

namespace {

std::vector<double> random_params(const ControlShape& shape, std::uint64_t index, double scale) {
    RandomStream rng(5, streams::test, index);
    std::vector<double> p(shape.flat_size());
    for (double& x : p) x = scale * rng.normal();
    return p;
}

}  // namespace

TEST_CASE("bounds and shape validation") {
    CHECK_THROWS_AS((AdmissibleBounds{0.0, 1.0, 1.0}.validate()), ParameterError);
    CHECK_THROWS_AS((AdmissibleBounds{1.0, -1.0, 1.0}.validate()), ParameterError);
    AdmissibleBounds b{1.0, 8.0, 2.0};
    CHECK(b.gain_limit() == doctest::Approx(1.0));
    CHECK(b.slope_limit() == doctest::Approx(2.0));
    ControlShape s{4, 9, 1.0};
    CHECK(s.flat_size() == 40);
    CHECK(s.knot_spacing() == doctest::Approx(0.125));
    CHECK_THROWS_AS((ControlShape{0, 9, 1.0}.validate()), ParameterError);
}

TEST_CASE("zero control") {
    Grid g(20);
    const auto c = FeedbackControl::zero({}, {});
    CHECK(c.is_zero());
    CHECK(c.eval(0.0, g.zeros(), g).is_zero());
    CHECK(c.eval(0.7, random_vector(g, 1), g).is_zero());
}

TEST_CASE("single-mode gain") {
    Grid g(20);
    const ControlShape shape{4, 3, 1.0};
    const AdmissibleBounds bounds{1.0, 1.0, 3.0};
    std::vector<double> flat(shape.flat_size(), 0.0);
    flat[0] = bounds.gain_limit();
    const FeedbackControl c(shape, bounds, flat);
    const StateVector e1 = g.mode_vector(1);
    const StateVector out = c.eval(0.4, e1, g);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(out[i] == doctest::Approx(std::sqrt(1.5) * e1[i]).epsilon(1e-12));
    }
}

TEST_CASE("offset interpolates knots linearly") {
    Grid g(16);
    const ControlShape shape{2, 3, 2.0};
    const AdmissibleBounds bounds{1.0, 100.0, 1.0};
    // knots at t = 0, 1, 2
    std::vector<double> flat{0.0, 0.0, 0.1, 0.2, 0.5, -0.2, 0.3, 0.0};
    const FeedbackControl c(shape, bounds, flat);
    const auto mid = c.offset_coefficients(0.5);
    CHECK(mid[0] == doctest::Approx(0.3));
    CHECK(mid[1] == doctest::Approx(0.0));
    const auto end = c.offset_coefficients(2.0);
    CHECK(end[0] == doctest::Approx(0.3));
    const StateVector off = c.offset(1.0, g);
    CHECK(h_norm(off, g) == doctest::Approx(std::hypot(0.5, 0.2)).epsilon(1e-12));
    CHECK_THROWS_AS(c.eval(2.5, g.zeros(), g), RangeError);
    CHECK_THROWS_AS(c.eval(-0.1, g.zeros(), g), RangeError);
}

TEST_CASE("constructor rejects inadmissible parameters") {
    const ControlShape shape{1, 2, 1.0};
    const AdmissibleBounds bounds{1.0, 1.0, 2.0};
    CHECK_THROWS_AS(FeedbackControl(shape, bounds, {1.5, 0.0, 0.0}), ParameterError);
    CHECK_THROWS_AS(FeedbackControl(shape, bounds, {0.0, 2.0, 2.0}), ParameterError);
    CHECK_THROWS_AS(FeedbackControl(shape, bounds, {0.0, 0.0, 1.0}), ParameterError);
    CHECK_NOTHROW(FeedbackControl(shape, bounds, {1.0, 0.5, 0.9}));
}

TEST_CASE("projection examples") {
    const ControlShape shape{4, 9, 1.0};
    const AdmissibleBounds bounds{0.5, 2.0, 2.0};

    std::vector<double> ok(shape.flat_size(), 0.0);
    ok[0] = 0.3;
    for (std::size_t j = 0; j < shape.knots; ++j) ok[4 + 4 * j] = 0.2;
    ok[9] = 0.1;
    REQUIRE(is_admissible(ok, shape, bounds));
    CHECK(project_admissible(ok, shape, bounds).flat() == ok);

    std::vector<double> big(shape.flat_size(), 0.0);
    big[0] = 10.0 * bounds.gain_limit();
    big[1] = -10.0 * bounds.gain_limit();
    const auto pc = project_admissible(big, shape, bounds);
    CHECK(pc.gammas()[0] == doctest::Approx(bounds.gain_limit()));
    CHECK(pc.gammas()[1] == doctest::Approx(-bounds.gain_limit()));

    // g(0) with squared norm 4η lands on the η-sphere.
    std::vector<double> far(shape.flat_size(), 0.0);
    far[4] = 2.0 * std::sqrt(bounds.eta);
    const auto pg = project_admissible(far, shape, bounds);
    double n0 = 0.0;
    for (double x : pg.knot(0)) n0 += x * x;
    CHECK(n0 == doctest::Approx(bounds.eta).epsilon(1e-9));

    std::vector<double> nan(shape.flat_size(), 0.0);
    nan[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(project_admissible(nan, shape, bounds), NumericDomainError);
}

TEST_CASE("projection is idempotent and admissible") {
    const ControlShape shape{3, 5, 0.5};
    const AdmissibleBounds bounds{0.2, 0.7, 1.3};
    for (std::uint64_t i = 0; i < 200; ++i) {
        const auto raw = random_params(shape, i, i % 3 == 0 ? 0.05 : 3.0);
        const auto once = project_admissible(raw, shape, bounds);
        CHECK(is_admissible(once.flat(), shape, bounds));
        const auto twice = project_admissible(once.flat(), shape, bounds);
        CHECK(twice.flat() == once.flat());
    }
}

TEST_CASE("sampled Lipschitz audit of constructed controls") {
    Grid g(31);
    const ControlShape shape{4, 9, 1.0};
    const AdmissibleBounds bounds{0.5, 1.5, 2.5};
    for (std::uint64_t c = 0; c < 5; ++c) {
        const auto ctrl = project_admissible(random_params(shape, 50 + c, 4.0), shape, bounds);
        RandomStream rng(9, streams::test, c);
        double worst = std::numeric_limits<double>::infinity();
        double worst_x = std::numeric_limits<double>::infinity();
        for (std::uint64_t i = 0; i < 1000; ++i) {
            const double t = rng.uniform(), s = rng.uniform();
            const StateVector x = random_vector(g, 2 * i), y = random_vector(g, 2 * i + 1);
            const double dx = h_norm(x - y, g);
            const double d = h_norm(ctrl.eval(t, x, g) - ctrl.eval(s, y, g), g);
            worst = std::min(worst, bounds.lambda * (t - s) * (t - s) + bounds.alpha * dx * dx - d * d);
            const double dxt = h_norm(ctrl.eval(t, x, g) - ctrl.eval(t, y, g), g);
            worst_x = std::min(worst_x, std::sqrt(bounds.alpha) * dx - dxt);
        }
        CHECK(worst >= 0.0);
        CHECK(worst_x >= 0.0);
        const double g0 = h_norm(ctrl.eval(0.0, g.zeros(), g), g);
        CHECK(g0 * g0 <= bounds.eta);
    }
}
