#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "locmono/cost.hpp"
#include "locmono/errors.hpp"

using namespace locmono;
using locmono::testing::rel_err;

namespace {

constexpr double pi = std::numbers::pi;

StateVector sine(const Grid& g) {
    return g.sample([](double x) { return std::sin(pi * x); });
}

FeedbackControl control_with_gain(double gamma, double T) {
    const ControlShape shape{2, 3, T};
    std::vector<double> p(shape.flat_size(), 0.0);
    p[0] = gamma;
    p[2] = 0.1;
    p[4] = 0.2;
    return project_admissible(p, shape, AdmissibleBounds{1.0, 4.0, 8.0});
}

}  // namespace

TEST_CASE("cost is zero on the zero trajectory") {
    Grid g(31);
    const TimeGrid tg(0.5, 50);
    const ModelBundle m{DriftOperator::reaction_diffusion(4.0),
                        NoiseOperator::decaying(16, 0.5, 1.0, 0.05), g.zeros()};
    const auto crn = CrnSet::make(42, 8, tg, 16);
    const auto zero = FeedbackControl::zero({4, 9, tg.T}, {});
    const auto est = evaluate_cost(zero_target_cost(g, 1.0, 1.0, 1.0), zero, m, tg, crn, g);
    CHECK(est.mean == 0.0);
    CHECK(est.std_error == 0.0);
    CHECK(est.n_paths == 8);
    CHECK(est.crn_tag == crn.tag);
}

TEST_CASE("all-zero weights give zero cost for any control") {
    Grid g(31);
    const TimeGrid tg(0.5, 50);
    const ModelBundle m{DriftOperator::linear(), NoiseOperator::decaying(16, 0.5, 1.0, 0.05), sine(g)};
    const auto crn = CrnSet::make(42, 8, tg, 16);
    const auto spec = zero_target_cost(g, 0.0, 0.0, 0.0);
    CHECK(spec.all_weights_zero());
    for (double gam : {-1.0, 0.0, 1.5}) {
        CHECK(evaluate_cost(spec, control_with_gain(gam, tg.T), m, tg, crn, g).mean == 0.0);
    }
}

TEST_CASE("heat-decay cost oracle") {
    Grid g(127);
    const TimeGrid tg(0.1, 2000);
    const ModelBundle m{DriftOperator::linear(1.0), NoiseOperator::off(), sine(g)};
    const auto crn = CrnSet::make(1, 2, tg, 1);
    const auto zero = FeedbackControl::zero({1, 1, tg.T}, {});
    const auto est = evaluate_cost(zero_target_cost(g, 1.0, 0.0, 1.0), zero, m, tg, crn, g);
    const double T = tg.T;
    const double running = (pi * pi / 2.0) * (1.0 - std::exp(-2 * pi * pi * T)) / (2 * pi * pi);
    const double exact = running + std::exp(-2 * pi * pi * T) / 2.0;
    CHECK(rel_err(est.mean, exact) < 0.02);
}

TEST_CASE("pathwise cost against a naive double loop") {
    Grid g(15);
    const TimeGrid tg(0.4, 40);
    const ModelBundle m{DriftOperator::semilinear(0.5), NoiseOperator::decaying(8, 0.5, 1.0, 0.05),
                        sine(g)};
    const auto crn = CrnSet::make(3, 6, tg, 8);
    const auto ctrl = control_with_gain(-0.7, tg.T);
    CostSpec spec;
    spec.running_weight = 0.7;
    spec.control_weight = 0.3;
    spec.terminal_weight = 1.9;
    spec.u_ref = {g.mode_vector(2)};
    spec.u_T = g.mode_vector(1);
    const auto trajs = simulate_paths(m, ctrl, tg, crn, g);
    const auto est = evaluate_cost(spec, ctrl, m, tg, crn, g);
    double total = 0.0;
    for (std::size_t p = 0; p < trajs.size(); ++p) {
        const auto& tr = trajs[p];
        double c = 0.0;
        for (std::size_t k = 0; k < tg.n_steps; ++k) {
            const StateVector& u = tr.states[k];
            double vv = 0.0;
            for (std::size_t e = 0; e <= g.n_interior(); ++e) {
                const double r = e < g.n_interior() ? u[e] - spec.u_ref[0][e] : 0.0;
                const double l = e > 0 ? u[e - 1] - spec.u_ref[0][e - 1] : 0.0;
                vv += (r - l) * (r - l) / g.h();
            }
            const StateVector phi = ctrl.eval(tg.time(k), u, g);
            double kk = 0.0;
            for (std::size_t i = 0; i < g.n_interior(); ++i) kk += g.h() * phi[i] * phi[i];
            c += tg.dt() * (spec.running_weight * vv + spec.control_weight * kk);
        }
        double term = 0.0;
        for (std::size_t i = 0; i < g.n_interior(); ++i) {
            const double d = tr.states.back()[i] - spec.u_T[i];
            term += g.h() * d * d;
        }
        c += spec.terminal_weight * term;
        const double pc = pathwise_cost(spec, tr, ctrl, tg, g);
        CHECK(pc == doctest::Approx(c).epsilon(1e-12));
        CHECK(est.per_path[p] == pc);
        total += pc;
    }
    CHECK(est.mean == doctest::Approx(total / 6.0).epsilon(1e-12));
}

TEST_CASE("tracking terms vanish on a constant target trajectory") {
    Grid g(15);
    const TimeGrid tg(1.0, 4);
    const StateVector u = g.mode_vector(1);
    Trajectory tr;
    tr.states.assign(5, u);
    tr.h_norms.assign(5, h_norm(u, g));
    tr.v_norms.assign(5, v_norm(u, g));
    const auto ctrl = control_with_gain(0.5, tg.T);
    CostSpec spec;
    spec.running_weight = 2.0;
    spec.control_weight = 0.5;
    spec.terminal_weight = 3.0;
    spec.u_ref = {u};
    spec.u_T = u;
    double expect = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        expect += 0.25 * 0.5 * std::pow(h_norm(ctrl.eval(tg.time(k), u, g), g), 2);
    }
    CHECK(pathwise_cost(spec, tr, ctrl, tg, g) == doctest::Approx(expect).epsilon(1e-12));
    tr.mode = TrajectoryMode::auxiliary;
    CHECK_THROWS_AS(pathwise_cost(spec, tr, ctrl, tg, g), UsageError);
}

TEST_CASE("cost is monotone in each weight") {
    Grid g(31);
    const TimeGrid tg(0.5, 100);
    const ModelBundle m{DriftOperator::reaction_diffusion(4.0),
                        NoiseOperator::decaying(16, 0.5, 1.0, 0.05), sine(g)};
    const auto crn = CrnSet::make(42, 10, tg, 16);
    const auto ctrl = control_with_gain(-1.0, tg.T);
    const auto base = zero_target_cost(g, 1.0, 0.1, 1.0);
    const double j0 = evaluate_cost(base, ctrl, m, tg, crn, g).mean;
    for (int which = 0; which < 3; ++which) {
        CostSpec s = base;
        (which == 0 ? s.running_weight : which == 1 ? s.control_weight : s.terminal_weight) += 0.5;
        CHECK(evaluate_cost(s, ctrl, m, tg, crn, g).mean >= j0);
    }
}

TEST_CASE("pathwise cost is convex along an offset segment for linear dynamics") {
    // With fixed gains the linear equation is affine in the offset g, so the
    // quadratic cost is convex along any segment of knot values.
    Grid g(31);
    const TimeGrid tg(0.5, 100);
    const ModelBundle m{DriftOperator::linear(), NoiseOperator::decaying(16, 0.5, 1.0, 0.05), sine(g)};
    const auto crn = CrnSet::make(42, 4, tg, 16);
    CostSpec spec = zero_target_cost(g, 1.0, 0.2, 1.0);
    spec.u_ref = {g.mode_vector(1)};
    std::vector<double> values;
    const ControlShape shape{2, 3, tg.T};
    const AdmissibleBounds bounds{1.0, 4.0, 8.0};
    const std::vector<double> a{-0.8, 0.4, 0.2, -0.1, 0.1, 0.0, 0.0, 0.1};
    const std::vector<double> b{-0.8, 0.4, -0.1, 0.1, 0.0, 0.0, 0.1, -0.1};
    for (int i = 0; i <= 20; ++i) {
        const double s = i / 20.0;
        std::vector<double> p(a.size());
        for (std::size_t j = 0; j < p.size(); ++j) p[j] = (1 - s) * a[j] + s * b[j];
        REQUIRE(is_admissible(p, shape, bounds));
        values.push_back(
            evaluate_cost(spec, FeedbackControl(shape, bounds, p), m, tg, crn, g).per_path[1]);
    }
    for (std::size_t i = 1; i + 1 < values.size(); ++i) {
        CHECK(values[i - 1] - 2 * values[i] + values[i + 1] >= -1e-8);
    }
}

TEST_CASE("common random numbers") {
    Grid g(31);
    const TimeGrid tg(0.5, 100);
    const ModelBundle m{DriftOperator::reaction_diffusion(4.0),
                        NoiseOperator::decaying(16, 0.5, 1.0, 0.05), sine(g)};
    const auto spec = zero_target_cost(g, 1.0, 0.1, 1.0);
    const auto ctrl = control_with_gain(-0.5, tg.T);
    const auto crn = CrnSet::make(42, 16, tg, 16);
    const auto a = evaluate_cost(spec, ctrl, m, tg, crn, g, 1);
    const auto b = evaluate_cost(spec, ctrl, m, tg, crn, g, 3);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
    CHECK(a.crn_tag == b.crn_tag);

    // Independent sets disagree by at most 4 combined standard errors in most trials.
    int within = 0;
    for (std::uint64_t r = 0; r < 20; ++r) {
        const auto e1 = evaluate_cost(spec, ctrl, m, tg, CrnSet::make(100 + r, 16, tg, 16), g);
        const auto e2 = evaluate_cost(spec, ctrl, m, tg, CrnSet::make(200 + r, 16, tg, 16), g);
        CHECK(e1.crn_tag != e2.crn_tag);
        const double se = std::hypot(e1.std_error, e2.std_error);
        if (std::abs(e1.mean - e2.mean) <= 4 * se) ++within;
    }
    CHECK(within >= 19);
}

TEST_CASE("cost spec validation") {
    Grid g(7);
    const TimeGrid tg(1.0, 4);
    CostSpec s = zero_target_cost(g, 1.0, 1.0, 1.0);
    CHECK_NOTHROW(s.validate(g, tg));
    s.running_weight = -1.0;
    CHECK_THROWS(s.validate(g, tg));
    s = zero_target_cost(g, 1.0, 1.0, 1.0);
    s.u_ref.assign(3, g.zeros());
    CHECK_THROWS(s.validate(g, tg));
}
