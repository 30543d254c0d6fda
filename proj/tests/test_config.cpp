#include <doctest.h>

#include <cmath>

#include "locmono/config.hpp"
#include "locmono/errors.hpp"

using namespace locmono;

namespace {

std::string key_of(const std::string& text) {
    try {
        RunConfig::parse(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return {};
}

}  // namespace

TEST_CASE("defaults round trip through the canonical form") {
    const RunConfig c;
    const std::string text = c.canonical();
    CHECK(RunConfig::parse(text) == c);
    CHECK(RunConfig::parse(text).canonical() == text);
}

TEST_CASE("parse with comments, lists and overrides") {
    const std::string text = R"(# heat run
model.kind = linear
model.n = 31
model.nu = 0.75    # trailing comment
control.params = 0.1, -0.2, 0, 0
control.m_c = 1
control.knots = 3
control.free = 0
cost.u_ref = modes
cost.u_ref_modes = 1, 0.5
run.T = 0.25
audit.conditions = A2,C3
audit.override.theta1 = 0.5
audit.rho_scale = 0.5
)";
    const RunConfig c = RunConfig::parse(text);
    CHECK(c.model.kind == DriftKind::linear);
    CHECK(c.model.n == 31);
    CHECK(c.model.nu == 0.75);
    CHECK(c.control.params == std::vector<double>{0.1, -0.2, 0.0, 0.0});
    CHECK(c.control.free == std::vector<std::size_t>{0});
    CHECK(c.cost.u_ref.preset == "modes");
    CHECK(c.audit.conditions == std::vector<std::string>{"A2", "C3"});
    CHECK(c.audit.overrides.at("theta1") == 0.5);
    CHECK(RunConfig::parse(c.canonical()) == c);

    const Grid g = c.grid();
    CHECK(g.n_interior() == 31);
    const auto k = c.constants(g);
    CHECK(k.theta1 == 0.5);
    const StateVector ref = c.cost_spec(g).u_ref.front();
    const StateVector expect = g.mode_vector(1) + 0.5 * g.mode_vector(2);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(ref[i] == doctest::Approx(expect[i]));
}

TEST_CASE("constraint violations name the key") {
    CHECK(key_of("model.kind = semilinear\nmodel.J = 1.5\n") == "model.J");
    CHECK(key_of("model.q = 1\n") == "model.q");
    const std::string pk = key_of("model.p = 2\nmodel.P = 1\n");
    CHECK((pk == "model.p" || pk == "model.P"));
    CHECK(key_of("control.eta = -1\n") == "control.eta");
    CHECK(key_of("model.n = abc\n") == "model.n");
    CHECK(key_of("model.bogus = 1\n") == "model.bogus");
    CHECK(key_of("audit.override.nothing = 1\n") == "audit.override.nothing");
    CHECK(key_of("model.kind = warp\n") == "model.kind");
    CHECK_THROWS_AS(RunConfig::parse("just some words\n"), ConfigError);
}

TEST_CASE("model hash tracks model-defining keys only") {
    RunConfig a;
    RunConfig b = a;
    b.audit.samples = 17;
    b.run.seed = 99;
    b.run.paths = 3;
    b.control.free = {0};
    CHECK(a.model_hash() == b.model_hash());
    b.model.q = 3.0;
    CHECK(a.model_hash() != b.model_hash());
    CHECK(a.model_hash().size() == 16);
}

TEST_CASE("derived objects") {
    RunConfig c;
    c.set("model.kind", "nonlocal");
    c.set("model.coefficient", "table");
    c.set("model.p", "0.5");
    c.set("model.P", "1.9");
    c.set("model.table_knots", "0,0.3,1");
    c.set("model.table_values", "1.9,1.9,0.5");
    c.validate();
    const auto d = c.drift();
    CHECK(d.kind() == DriftKind::nonlocal);
    CHECK(d.params().coefficient.is_table());
    CHECK(d.params().coefficient.lipschitz() == doctest::Approx(2.0));
    CHECK(c.time_grid().T == c.run.T);
    CHECK(c.control_shape().T == c.run.T);
    CHECK(c.control_value().is_zero());
    CHECK(c.noise().m_modes() == c.model.noise_modes);

    c.set("control.params", "100");
    CHECK_THROWS_AS(c.validate(), ConfigError);  // wrong length
}

TEST_CASE("configured control parameters are projected") {
    RunConfig c;
    c.set("control.m_c", "1");
    c.set("control.knots", "2");
    c.set("control.alpha", "2");
    c.set("control.params", "5, 0, 0");
    c.validate();
    CHECK(c.control_value().gammas()[0] == doctest::Approx(1.0));
}
