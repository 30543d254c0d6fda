#pragma once

// Sampled audits of the structural inequalities. Every margin is RHS - LHS of the
// inequality at one sample, so a negative worst margin refutes the declared constants.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "locmono/controls.hpp"
#include "locmono/operators.hpp"
#include "locmono/rng.hpp"
#include "locmono/spaces.hpp"

namespace locmono {

enum class ConditionId { A1, A2, A3, A4, C1, C2, C3, C4, C5, CTRL3, CTRL4 };

std::string_view to_string(ConditionId id) noexcept;
/// Throws ConfigError naming the valid ids.
ConditionId parse_condition_id(std::string_view name);
std::vector<ConditionId> all_condition_ids();

struct SamplerConfig {
    std::size_t samples = 10000;
    double radius = 5.0;    ///< states have V-norm R·U, U uniform on [0, 1)
    double decay_lo = 0.5;  ///< per-sample decay s is uniform on [decay_lo, decay_hi]
    double decay_hi = 2.5;
    std::size_t modes = 0;  ///< K_s; 0 means every grid mode
    double T = 1.0;
    std::uint64_t seed = 42;

    void validate() const;
};

/// One audit sample: times t, s and three states.
struct Sample {
    std::size_t index = 0;
    double t = 0.0;
    double s = 0.0;
    StateVector v1, v2, v3;
};

/// Draws reproducible samples; sample i depends only on (seed, i).
///
/// States are v = Σ_{k≤K_s} ξ_k e_k / λ_k^{s/2}, rescaled to V-norm R·U. On odd
/// indices v2 is a small perturbation of v1, so near-diagonal pairs are covered.
class StateSampler {
public:
    StateSampler(SamplerConfig config, const Grid& grid);

    const SamplerConfig& config() const noexcept { return config_; }
    Sample draw(std::size_t index) const;
    StateVector draw_state(std::size_t index, std::size_t slot) const;

private:
    StateVector random_state(RandomStream& rng, double decay, double norm) const;

    SamplerConfig config_;
    const Grid* grid_;
};

/// Everything an audit evaluates: drift, noise, control and the grid.
struct AuditModel {
    const DriftOperator& drift;
    const NoiseOperator& noise;
    const FeedbackControl& control;
    const Grid& grid;
};

struct AuditReport {
    ConditionId id = ConditionId::A2;
    std::size_t samples = 0;
    double worst_margin = 0.0;
    Sample witness;
    ConditionConstants constants;
    std::vector<double> margins;  ///< per-sample margins, index order

    bool passed(double tolerance) const noexcept { return worst_margin >= -tolerance; }
};

/// Margin of one condition at one sample. A1 is rejected here (see audit_hemicontinuity).
double evaluate_margin(ConditionId id, const AuditModel& model, const ConditionConstants& k,
                       const Sample& sample);

AuditReport audit(ConditionId id, const AuditModel& model, const StateSampler& sampler,
                  const ConditionConstants& k, unsigned threads = 1);

AuditReport audit_local_monotonicity(const AuditModel& model, const StateSampler& sampler,
                                     const ConditionConstants& k, unsigned threads = 1);
AuditReport audit_coercivity(const AuditModel& model, const StateSampler& sampler,
                             const ConditionConstants& k, unsigned threads = 1);
AuditReport audit_growth(const AuditModel& model, const StateSampler& sampler,
                         const ConditionConstants& k, unsigned threads = 1);
AuditReport audit_C(ConditionId id, const AuditModel& model, const StateSampler& sampler,
                    const ConditionConstants& k, unsigned threads = 1);

/// Refinement test of s ↦ ⟨A(w_s, w_s), v⟩ + ⟨Φ(t, w_s), v⟩, w_s = v1 + s·v2,
/// s ∈ [-1, 1]. With m(Δs) = max adjacent jump |f(s+Δs) - f(s)| on `steps` and
/// 2·`steps` intervals, the margin is 0.75·m_coarse + tol - m_fine: the jumps of a
/// continuous map halve under refinement, a discontinuity keeps them.
AuditReport audit_hemicontinuity(const AuditModel& model, const StateSampler& sampler,
                                 std::size_t steps = 100, unsigned threads = 1);

/// Hemicontinuity margin for one sample.
double hemicontinuity_margin(const AuditModel& model, const Sample& sample, std::size_t steps);

/// Flat JSON object for one report (witness states as arrays).
std::string report_json(const AuditReport& report, double tolerance);

}  // namespace locmono
