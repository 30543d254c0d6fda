#include "locmono/conditions.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <json.hpp>

#include "locmono/errors.hpp"
#include "locmono/parallel.hpp"

namespace locmono {

namespace {

constexpr std::array<std::pair<ConditionId, std::string_view>, 11> kNames{{
    {ConditionId::A1, "A1"},
    {ConditionId::A2, "A2"},
    {ConditionId::A3, "A3"},
    {ConditionId::A4, "A4"},
    {ConditionId::C1, "C1"},
    {ConditionId::C2, "C2"},
    {ConditionId::C3, "C3"},
    {ConditionId::C4, "C4"},
    {ConditionId::C5, "C5"},
    {ConditionId::CTRL3, "CTRL3"},
    {ConditionId::CTRL4, "CTRL4"},
}};

double sq(double x) { return x * x; }

const RhoForm& require_rho(const ConditionConstants& k, ConditionId id) {
    if (!k.rho) {
        throw ConfigError("condition " + std::string(to_string(id)) + " needs a rho form",
                          "audit.constants.rho");
    }
    return *k.rho;
}

// ⟨A(t,w1,v1) - A(t,w2,v2), z⟩
double pairing_difference(const AuditModel& m, double t, const StateVector& w1,
                          const StateVector& v1, const StateVector& w2, const StateVector& v2,
                          const StateVector& z) {
    return m.drift.pairing(t, w1, v1, z, m.grid) - m.drift.pairing(t, w2, v2, z, m.grid);
}

}  // namespace

std::string_view to_string(ConditionId id) noexcept {
    for (const auto& [cid, name] : kNames) {
        if (cid == id) return name;
    }
    return "unknown";
}

ConditionId parse_condition_id(std::string_view name) {
    for (const auto& [cid, n] : kNames) {
        if (n == name) return cid;
    }
    std::string valid;
    for (const auto& [cid, n] : kNames) {
        if (!valid.empty()) valid += ", ";
        valid += n;
    }
    throw ConfigError("unknown condition id '" + std::string(name) + "' (valid ids: " + valid + ")",
                      "audit.conditions");
}

std::vector<ConditionId> all_condition_ids() {
    std::vector<ConditionId> ids;
    for (const auto& [cid, n] : kNames) ids.push_back(cid);
    return ids;
}

// ---------------------------------------------------------------------------
// Sampler

void SamplerConfig::validate() const {
    if (samples == 0) throw ConfigError("need at least one sample", "audit.samples");
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw ConfigError("radius must be > 0", "audit.radius");
    }
    if (!(decay_lo >= 0.0) || !(decay_hi >= decay_lo) || !std::isfinite(decay_hi)) {
        throw ConfigError("need 0 <= decay_lo <= decay_hi", "audit.decay_lo");
    }
    if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("T must be > 0", "run.T");
}

StateSampler::StateSampler(SamplerConfig config, const Grid& grid)
    : config_(config), grid_(&grid) {
    config_.validate();
    if (config_.modes == 0 || config_.modes > grid.n_interior()) config_.modes = grid.n_interior();
}

StateVector StateSampler::random_state(RandomStream& rng, double decay, double norm) const {
    std::vector<double> coeff(config_.modes);
    for (std::size_t k = 0; k < config_.modes; ++k) {
        coeff[k] = rng.normal() * std::pow(grid_->eigenvalue(k + 1), -decay / 2.0);
    }
    StateVector v = grid_->synthesize(coeff);
    const double vn = v_norm(v, *grid_);
    if (vn > 0.0) v *= norm / vn;
    return v;
}

Sample StateSampler::draw(std::size_t index) const {
    RandomStream rng(config_.seed, streams::audit, index);
    Sample s;
    s.index = index;
    s.t = rng.uniform(0.0, config_.T);
    s.s = rng.uniform(0.0, config_.T);
    const double decay = rng.uniform(config_.decay_lo, config_.decay_hi);
    const double R = config_.radius;
    s.v1 = random_state(rng, decay, R * rng.uniform());
    if (index % 2 == 1) {
        const double scale = R * rng.uniform() * std::pow(10.0, -3.0 * rng.uniform());
        s.v2 = s.v1 + random_state(rng, decay, scale);
    } else {
        s.v2 = random_state(rng, decay, R * rng.uniform());
    }
    s.v3 = random_state(rng, decay, R * rng.uniform());
    return s;
}

StateVector StateSampler::draw_state(std::size_t index, std::size_t slot) const {
    Sample s = draw(index);
    switch (slot) {
        case 0: return s.v1;
        case 1: return s.v2;
        case 2: return s.v3;
        default: throw RangeError("sample slot must be 0, 1 or 2");
    }
}

// ---------------------------------------------------------------------------
// Margins

double evaluate_margin(ConditionId id, const AuditModel& m, const ConditionConstants& k,
                       const Sample& sample) {
    const Grid& g = m.grid;
    const double t = sample.t;
    const StateVector& v1 = sample.v1;
    const StateVector& v2 = sample.v2;
    const StateVector& v3 = sample.v3;

    switch (id) {
        case ConditionId::A1:
            throw UsageError("A1 is audited by audit_hemicontinuity");

        case ConditionId::A2: {
            const RhoForm& rho = require_rho(k, id);
            const StateVector d = v1 - v2;
            const double lhs = 2.0 * pairing_difference(m, t, v1, v1, v2, v2, d) +
                               2.0 * h_inner(m.control.eval(t, v1, g) - m.control.eval(t, v2, g), d, g) +
                               m.noise.hs_distance_sq(t, v1, v2, g);
            return (k.K + rho(v2, g)) * sq(h_norm(d, g)) - lhs;
        }
        case ConditionId::A3: {
            const double lhs = 2.0 * m.drift.pairing(t, v1, v1, v1, g) +
                               2.0 * h_inner(m.control.eval(t, v1, g), v1, g) +
                               m.noise.hs_norm_sq(t, v1, g);
            return -k.theta * sq(v_norm(v1, g)) + k.K * sq(h_norm(v1, g)) + 1.0 - lhs;
        }
        case ConditionId::A4: {
            const double lhs = sq(vprime_norm(m.drift.apply(t, v1, v1, g), g)) +
                               sq(vprime_norm(m.control.eval(t, v1, g), g));
            const double a = h_norm(v1, g);
            return (1.0 + k.K * sq(v_norm(v1, g))) * (1.0 + std::pow(a, k.beta)) - lhs;
        }
        case ConditionId::C1: {
            const double lip = k.L * sq(h_norm(v1 - v2, g)) - m.noise.hs_distance_sq(t, v1, v2, g);
            const double at_zero = -std::sqrt(m.noise.hs_norm_sq(0.0, v1, g));
            return std::min(lip, at_zero);
        }
        case ConditionId::C2:
            return -k.K1 * sq(v_norm(v2, g)) + k.J1 * sq(h_norm(v2, g)) -
                   m.drift.pairing(t, v1, v2, v2, g);
        case ConditionId::C3: {
            const StateVector d = v2 - v3;
            return -k.theta1 * sq(v_norm(d, g)) - pairing_difference(m, t, v1, v2, v1, v3, d);
        }
        case ConditionId::C4: {
            const RhoForm& rho = require_rho(k, id);
            const StateVector e = v2 - v3;
            const StateVector d = v2 - v1;
            const double r = rho(v1, g);
            const double rhs = -k.c5 * sq(v_norm(e, g)) + (k.c4 + k.c1 * r) * sq(h_norm(e, g)) +
                               k.c2 * sq(v_norm(d, g)) + k.c3 * r * sq(v_norm(d, g));
            return rhs - pairing_difference(m, t, v1, v2, v3, v3, e);
        }
        case ConditionId::C5: {
            if (!k.dual_growth) {
                throw ConfigError("C5 is not applicable to this operator (no dual growth bound)",
                                  "audit.conditions");
            }
            const auto& c = *k.dual_growth;
            const double rhs = c.theta2 * sq(v_norm(v2, g)) +
                               c.p3 * sq(h_norm(v1, g)) * sq(v_norm(v1, g)) +
                               c.p4 * sq(h_norm(v2, g)) * sq(v_norm(v2, g)) + c.p5;
            return rhs - sq(vprime_norm(m.drift.apply(t, v1, v2, g), g));
        }
        case ConditionId::CTRL3: {
            const double n0 = h_norm(m.control.eval(0.0, g.zeros(), g), g);
            return m.control.bounds().eta - n0 * n0;
        }
        case ConditionId::CTRL4: {
            const auto& b = m.control.bounds();
            const double ts = m.control.shape().T;
            const double tt = std::min(t, ts), ss = std::min(sample.s, ts);
            const double lhs = sq(h_norm(m.control.eval(tt, v1, g) - m.control.eval(ss, v2, g), g));
            return b.lambda * sq(tt - ss) + b.alpha * sq(h_norm(v1 - v2, g)) - lhs;
        }
    }
    throw InternalError("unhandled condition id");
}

namespace {

AuditReport reduce(ConditionId id, const StateSampler& sampler, const ConditionConstants& k,
                   std::vector<double> margins) {
    AuditReport r;
    r.id = id;
    r.samples = margins.size();
    r.constants = k;
    std::size_t worst = 0;
    for (std::size_t i = 1; i < margins.size(); ++i) {
        // NaN margins count as refutations
        if (margins[i] < margins[worst] || (std::isnan(margins[i]) && !std::isnan(margins[worst]))) {
            worst = i;
        }
    }
    r.worst_margin = margins[worst];
    r.witness = sampler.draw(worst);
    r.margins = std::move(margins);
    return r;
}

}  // namespace

AuditReport audit(ConditionId id, const AuditModel& model, const StateSampler& sampler,
                  const ConditionConstants& k, unsigned threads) {
    if (id == ConditionId::A1) return audit_hemicontinuity(model, sampler, 100, threads);
    // configuration problems surface before any parallel work
    if ((id == ConditionId::A2 || id == ConditionId::C4)) require_rho(k, id);
    if (id == ConditionId::C5 && !k.dual_growth) {
        throw ConfigError("C5 is not applicable to this operator (no dual growth bound)",
                          "audit.conditions");
    }
    const std::size_t n = sampler.config().samples;
    std::vector<double> margins(n);
    parallel_for(n, threads, [&](std::size_t i) {
        margins[i] = evaluate_margin(id, model, k, sampler.draw(i));
    });
    return reduce(id, sampler, k, std::move(margins));
}

AuditReport audit_local_monotonicity(const AuditModel& model, const StateSampler& sampler,
                                     const ConditionConstants& k, unsigned threads) {
    return audit(ConditionId::A2, model, sampler, k, threads);
}

AuditReport audit_coercivity(const AuditModel& model, const StateSampler& sampler,
                             const ConditionConstants& k, unsigned threads) {
    return audit(ConditionId::A3, model, sampler, k, threads);
}

AuditReport audit_growth(const AuditModel& model, const StateSampler& sampler,
                         const ConditionConstants& k, unsigned threads) {
    return audit(ConditionId::A4, model, sampler, k, threads);
}

AuditReport audit_C(ConditionId id, const AuditModel& model, const StateSampler& sampler,
                    const ConditionConstants& k, unsigned threads) {
    switch (id) {
        case ConditionId::C1:
        case ConditionId::C2:
        case ConditionId::C3:
        case ConditionId::C4:
        case ConditionId::C5: return audit(id, model, sampler, k, threads);
        default:
            throw ConfigError("audit_C expects one of C1..C5, got " + std::string(to_string(id)),
                              "audit.conditions");
    }
}

// ---------------------------------------------------------------------------
// Hemicontinuity

namespace {

struct CurveStats {
    double jump = 0.0;       // max |f(s+Δs) - f(s)|
    double magnitude = 0.0;  // max |f|
};

CurveStats curve(const AuditModel& m, const Sample& s, std::size_t steps) {
    const double ds = 2.0 / static_cast<double>(steps);
    CurveStats c;
    double prev = 0.0;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double sv = -1.0 + ds * static_cast<double>(i);
        StateVector w = s.v1;
        w.axpy(sv, s.v2);
        const double f = m.drift.pairing(s.t, w, w, s.v3, m.grid) +
                         h_inner(m.control.eval(s.t, w, m.grid), s.v3, m.grid);
        c.magnitude = std::max(c.magnitude, std::abs(f));
        if (i > 0) c.jump = std::max(c.jump, std::abs(f - prev));
        prev = f;
    }
    return c;
}

}  // namespace

double hemicontinuity_margin(const AuditModel& model, const Sample& sample, std::size_t steps) {
    if (steps < 100) throw ParameterError("hemicontinuity audit needs at least 100 steps");
    const CurveStats coarse = curve(model, sample, steps);
    const CurveStats fine = curve(model, sample, 2 * steps);
    const double tol = 1e-12 * (1.0 + fine.magnitude);
    return 0.75 * coarse.jump + tol - fine.jump;
}

AuditReport audit_hemicontinuity(const AuditModel& model, const StateSampler& sampler,
                                 std::size_t steps, unsigned threads) {
    if (steps < 100) throw ParameterError("hemicontinuity audit needs at least 100 steps");
    const std::size_t n = sampler.config().samples;
    std::vector<double> margins(n);
    parallel_for(n, threads, [&](std::size_t i) {
        margins[i] = hemicontinuity_margin(model, sampler.draw(i), steps);
    });
    return reduce(ConditionId::A1, sampler, {}, std::move(margins));
}

// ---------------------------------------------------------------------------
// JSON

std::string report_json(const AuditReport& r, double tolerance) {
    using nlohmann::json;
    const auto& k = r.constants;
    json constants = {
        {"theta", k.theta}, {"K", k.K},   {"beta", k.beta}, {"K1", k.K1}, {"J1", k.J1},
        {"theta1", k.theta1}, {"c1", k.c1}, {"c2", k.c2},   {"c3", k.c3}, {"c4", k.c4},
        {"c5", k.c5},       {"L", k.L},   {"alpha", k.alpha},
    };
    if (k.rho) {
        constants["rho_coefficient"] = k.rho->coefficient;
        constants["rho_exponent"] = k.rho->exponent;
    }
    if (k.dual_growth) {
        constants["theta2"] = k.dual_growth->theta2;
        constants["p3"] = k.dual_growth->p3;
        constants["p4"] = k.dual_growth->p4;
        constants["p5"] = k.dual_growth->p5;
    }
    json witness = {
        {"index", r.witness.index},     {"t", r.witness.t},
        {"s", r.witness.s},             {"v1", r.witness.v1.values()},
        {"v2", r.witness.v2.values()},  {"v3", r.witness.v3.values()},
    };
    json out = {
        {"condition_id", std::string(to_string(r.id))},
        {"samples", r.samples},
        {"worst_margin", r.worst_margin},
        {"tolerance", tolerance},
        {"passed", r.passed(tolerance)},
        {"witness", witness},
        {"constants", constants},
    };
    return out.dump(2);
}

}  // namespace locmono
