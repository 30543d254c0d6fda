#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "helpers.hpp"
#include "locmono/conditions.hpp"
#include "locmono/errors.hpp"

using namespace locmono;

namespace {

struct Setup {
    Grid grid;
    DriftOperator drift;
    NoiseOperator noise;
    FeedbackControl control;
    ConditionConstants k;

    Setup(std::size_t n, DriftOperator d)
        : grid(n),
          drift(std::move(d)),
          noise(NoiseOperator::decaying(16, 0.5, 1.0, 0.05)),
          control(project_admissible(std::vector<double>{0.3, -0.2, 0.1, 0.4, 0.2, 0.1, 0.0, 0.0,
                                                         0.3, 0.1, 0.0, 0.0},
                                     ControlShape{4, 2, 1.0}, AdmissibleBounds{0.25, 0.5, 1.0})),
          k(declared_constants(drift, noise.lipschitz_constant(grid), 1.0)) {}

    AuditModel model() const { return {drift, noise, control, grid}; }
};

StateSampler sampler(const Grid& g, std::size_t samples) {
    SamplerConfig c;
    c.samples = samples;
    return StateSampler(c, g);
}

}  // namespace

TEST_CASE("condition ids round trip") {
    for (auto id : all_condition_ids()) CHECK(parse_condition_id(to_string(id)) == id);
    try {
        parse_condition_id("Z9");
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("valid ids") != std::string::npos);
        CHECK(std::string(e.what()).find("C4") != std::string::npos);
    }
}

TEST_CASE("sampler is reproducible and respects the radius") {
    Grid g(32);
    const auto s = sampler(g, 100);
    for (std::size_t i = 0; i < 100; ++i) {
        const Sample a = s.draw(i), b = s.draw(i);
        CHECK(a.v1 == b.v1);
        CHECK(a.v3 == b.v3);
        CHECK(v_norm(a.v1, g) <= 5.0 * (1 + 1e-12));
        CHECK(a.t >= 0.0);
        CHECK(a.t <= 1.0);
    }
    // Odd samples pair v2 close to v1.
    const Sample odd = s.draw(7);
    CHECK(v_norm(odd.v2 - odd.v1, g) <= 5.0 * (1 + 1e-12));
}

TEST_CASE("diagonal samples give zero monotonicity margin") {
    Setup su(32, DriftOperator::reaction_diffusion(4.0));
    Sample smp = sampler(su.grid, 1).draw(0);
    smp.v2 = smp.v1;
    CHECK(evaluate_margin(ConditionId::A2, su.model(), su.k, smp) == 0.0);
}

TEST_CASE("coercivity at the origin with zero control") {
    Setup su(32, DriftOperator::linear());
    const auto zero = FeedbackControl::zero({}, {});
    AuditModel m{su.drift, su.noise, zero, su.grid};
    Sample smp = sampler(su.grid, 1).draw(0);
    smp.v1 = su.grid.zeros();
    CHECK(evaluate_margin(ConditionId::A3, m, su.k, smp) == doctest::Approx(1.0));
}

TEST_CASE("linear growth bound") {
    // ‖νΔv‖²_{V'} = ν²‖v‖_V²: the growth margin with zero control is at least 1.
    Setup su(32, DriftOperator::linear(1.0));
    const auto zero = FeedbackControl::zero({}, {});
    AuditModel m{su.drift, su.noise, zero, su.grid};
    const auto s = sampler(su.grid, 200);
    for (std::size_t i = 0; i < 200; ++i) {
        const Sample smp = s.draw(i);
        const double lhs = std::pow(vprime_norm(su.drift.apply(0, smp.v1, smp.v1, su.grid), su.grid), 2);
        CHECK(lhs == doctest::Approx(std::pow(v_norm(smp.v1, su.grid), 2)).epsilon(1e-9));
        CHECK(evaluate_margin(ConditionId::A4, m, su.k, smp) >= 1.0 - 1e-9);
    }
}

TEST_CASE("audits with declared constants pass") {
    struct Case {
        DriftOperator drift;
        std::vector<ConditionId> ids;
    };
    using C = ConditionId;
    const std::vector<Case> cases{
        {DriftOperator::linear(), {C::A2, C::A3, C::A4, C::C1, C::C2, C::C3, C::C4, C::C5}},
        {DriftOperator::reaction_diffusion(3.0), {C::A2, C::A3, C::A4, C::C2, C::C3, C::C4, C::C5}},
        {DriftOperator::reaction_diffusion(4.0), {C::A3, C::C3}},
        {DriftOperator::nonlocal(), {C::A2, C::A4, C::C4}},
        {DriftOperator::semilinear(0.5), {C::C3, C::C4}},
    };
    for (const auto& c : cases) {
        Setup su(32, c.drift);
        const auto s = sampler(su.grid, 1500);
        for (auto id : c.ids) {
            CAPTURE(to_string(c.drift.kind()));
            CAPTURE(to_string(id));
            const auto rep = audit(id, su.model(), s, su.k);
            CHECK(rep.samples == 1500);
            CHECK(rep.passed(1e-9));
        }
    }
}

TEST_CASE("witness re-evaluates to the worst margin") {
    Setup su(32, DriftOperator::reaction_diffusion(3.0));
    auto k = su.k;
    k.theta1 = 2.5;
    const auto s = sampler(su.grid, 1000);
    const auto rep = audit(ConditionId::C3, su.model(), s, k);
    CHECK(rep.worst_margin < 0.0);
    const double again = evaluate_margin(ConditionId::C3, su.model(), k, s.draw(rep.witness.index));
    CHECK(std::abs(again - rep.worst_margin) <= 1e-12 * (1 + std::abs(again)));
    double min = rep.margins.front();
    for (double m : rep.margins) min = std::min(min, m);
    CHECK(min == rep.worst_margin);

    k.theta1 = 0.5;
    CHECK(audit(ConditionId::C3, su.model(), s, k).passed(1e-9));
}

TEST_CASE("audit results are independent of thread count") {
    Setup su(32, DriftOperator::nonlocal());
    const auto s = sampler(su.grid, 400);
    const auto a = audit(ConditionId::A2, su.model(), s, su.k, 1);
    const auto b = audit(ConditionId::A2, su.model(), s, su.k, 4);
    CHECK(a.margins == b.margins);
    CHECK(a.worst_margin == b.worst_margin);
    CHECK(a.witness.index == b.witness.index);
}

TEST_CASE("missing rho and inapplicable C5 are configuration errors") {
    Setup su(32, DriftOperator::reaction_diffusion(4.0));
    const auto s = sampler(su.grid, 10);
    auto k = su.k;
    k.rho.reset();
    CHECK_THROWS_AS(audit(ConditionId::A2, su.model(), s, k), ConfigError);
    CHECK_THROWS_AS(audit(ConditionId::C5, su.model(), s, su.k), ConfigError);
    CHECK_THROWS_AS(evaluate_margin(ConditionId::A1, su.model(), su.k, s.draw(0)), UsageError);
}

TEST_CASE("hemicontinuity refinement") {
    for (const auto& d : {DriftOperator::linear(), DriftOperator::reaction_diffusion(3.0),
                          DriftOperator::nonlocal(), DriftOperator::semilinear(0.5)}) {
        Setup su(32, d);
        const auto rep = audit_hemicontinuity(su.model(), sampler(su.grid, 300), 100);
        CAPTURE(to_string(d.kind()));
        CHECK(rep.passed(1e-9));
    }
    Setup su(16, DriftOperator::linear());
    CHECK_THROWS_AS(hemicontinuity_margin(su.model(), sampler(su.grid, 1).draw(0), 50), ParameterError);
}

TEST_CASE("hemicontinuity flags a discontinuous coefficient") {
    // a drops from 1.9 to 0.5 over an s-interval far below the mesh width.
    Grid g(16);
    const auto a = NonlocalCoefficient::table(0.5, 1.9, {0.0, 1e-9}, {1.9, 0.5});
    const auto drift = DriftOperator::nonlocal(a);
    const auto noise = NoiseOperator::off();
    const auto zero = FeedbackControl::zero({1, 1, 1.0}, {});
    AuditModel m{drift, noise, zero, g};
    // w_s = e1 + (x + 5s)·e3 with ⟨Δw_s, e1⟩ = -λ1 fixed, and ∫w_s crossing zero at
    // s = 0.0037, strictly inside a cell of both meshes.
    const double ratio = integral(g.mode_vector(1), g) / integral(g.mode_vector(3), g);
    Sample smp;
    smp.t = 0.5;
    smp.v1 = g.mode_vector(1) + (-ratio - 5.0 * 0.0037) * g.mode_vector(3);
    smp.v2 = 5.0 * g.mode_vector(3);
    smp.v3 = g.mode_vector(1);
    CHECK(hemicontinuity_margin(m, smp, 100) < 0.0);
}

TEST_CASE("report json") {
    Setup su(16, DriftOperator::linear());
    const auto rep = audit(ConditionId::C2, su.model(), sampler(su.grid, 20), su.k);
    const auto j = nlohmann::json::parse(report_json(rep, 1e-9));
    CHECK(j["condition_id"] == "C2");
    CHECK(j["samples"] == 20);
    CHECK(j["worst_margin"].get<double>() == rep.worst_margin);
}
