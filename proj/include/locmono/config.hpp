#pragma once

// Line-based run configuration:
//
//   # comment
//   model.kind = rd
//   model.n = 63
//   cost.u_ref = first_mode
//
// Lists are comma separated. canonical() writes every key in sorted order with
// %.17g numbers; parse(canonical(c)) == c.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "locmono/conditions.hpp"
#include "locmono/controls.hpp"
#include "locmono/cost.hpp"
#include "locmono/operators.hpp"
#include "locmono/optimizer.hpp"
#include "locmono/solver.hpp"

namespace locmono {

/// Named state or mode-coefficient list: zero, sine (sin πx), first_mode (e_1) or modes.
struct StateSpec {
    std::string preset = "zero";
    std::vector<double> modes;  ///< used when preset == "modes"

    StateVector build(const Grid& g) const;
    friend bool operator==(const StateSpec&, const StateSpec&) = default;
};

struct ModelConfig {
    DriftKind kind = DriftKind::reaction_diffusion;
    std::size_t n = 63;
    double nu = 1.0;
    double q = 4.0;
    double p = 0.25;
    double P = 1.0;
    std::string coefficient = "rational";  ///< rational or table
    std::vector<double> table_knots;
    std::vector<double> table_values;
    double J = 0.5;
    std::size_t noise_modes = 16;
    double noise_amplitude = 0.5;
    double noise_decay = 1.0;
    double ramp_time = 0.05;
    StateSpec u0{"sine", {}};

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ControlConfig {
    double eta = 1.0;
    double lambda = 4.0;
    double alpha = 2.0;
    std::size_t m_c = 4;
    std::size_t knots = 9;
    std::vector<double> params;        ///< initial flat parameters; empty means zero
    std::vector<std::size_t> free;     ///< searched coordinates; empty means all

    friend bool operator==(const ControlConfig&, const ControlConfig&) = default;
};

struct CostConfig {
    double running_weight = 1.0;
    double control_weight = 0.01;
    double terminal_weight = 1.0;
    StateSpec u_ref{"first_mode", {}};
    StateSpec u_T{"first_mode", {}};

    friend bool operator==(const CostConfig&, const CostConfig&) = default;
};

struct RunSection {
    double T = 0.5;
    std::size_t n_steps = 200;
    std::size_t paths = 64;
    std::uint64_t seed = 42;
    std::size_t max_evals = 200;
    double init_scale = 0.25;
    std::size_t max_restarts = 2;
    std::size_t tail_k = 5;

    friend bool operator==(const RunSection&, const RunSection&) = default;
};

struct AuditConfig {
    std::size_t samples = 10000;
    double radius = 5.0;
    double tolerance = 1e-9;
    double decay_lo = 0.5;
    double decay_hi = 2.5;
    std::size_t modes = 0;
    std::vector<std::string> conditions{"A2", "A3", "A4", "C1", "C2", "C3", "C4", "C5"};
    double rho_scale = 1.0;                    ///< multiplies the declared ρ coefficient
    std::map<std::string, double> overrides;   ///< audit.override.<constant> = value

    friend bool operator==(const AuditConfig&, const AuditConfig&) = default;
};

struct RunConfig {
    ModelConfig model;
    ControlConfig control;
    CostConfig cost;
    RunSection run;
    AuditConfig audit;

    /// Throws ConfigError (with the key path) on malformed input or violated constraints.
    static RunConfig parse(std::string_view text);
    std::string canonical() const;
    /// Checks every cross-field constraint; parse() already calls it.
    void validate() const;
    /// Applies one `section.key = value` assignment (used by parse and by CLI overrides).
    void set(const std::string& key, const std::string& value);

    /// FNV-1a hash of the model, control, cost and time-grid keys, as 16 hex digits.
    std::string model_hash() const;

    Grid grid() const;
    DriftOperator drift() const;
    NoiseOperator noise() const;
    ModelBundle bundle(const Grid& g) const;
    TimeGrid time_grid() const;
    ControlShape control_shape() const;
    AdmissibleBounds bounds() const;
    /// Configured control parameters, projected onto the admissible set.
    FeedbackControl control_value() const;
    CostSpec cost_spec(const Grid& g) const;
    SamplerConfig sampler() const;
    SearchConfig search(unsigned threads) const;
    /// Declared constants with audit overrides applied.
    ConditionConstants constants(const Grid& g) const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig load_config(const std::string& path);

}  // namespace locmono
