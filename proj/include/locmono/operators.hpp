#pragma once

// Two-slot drift A(t, w, v) and multiplicative modal noise Ξ(t, u) for the four
// model equations: linear heat, reaction–diffusion, nonlocal-coefficient
// diffusion and the one-dimensional semilinear transport–diffusion equation.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "locmono/spaces.hpp"

namespace locmono {

enum class DriftKind { linear, reaction_diffusion, nonlocal, semilinear };

std::string_view to_string(DriftKind kind) noexcept;
/// Accepts the canonical names plus the short aliases "rd" and "heat".
DriftKind parse_drift_kind(std::string_view name);

/// Bounded, Lipschitz coefficient a(s) of the nonlocal equation, p ≤ a(s) ≤ P.
///
/// Either the rational profile p + (P-p)/(1+s²) or a piecewise-linear table
/// (constant outside the knot range).
class NonlocalCoefficient {
public:
    static NonlocalCoefficient rational(double p, double P);
    static NonlocalCoefficient table(double p, double P, std::vector<double> knots,
                                     std::vector<double> values);

    double operator()(double s) const;
    /// Global Lipschitz constant L1 of a.
    double lipschitz() const noexcept { return lipschitz_; }
    double lower() const noexcept { return p_; }
    double upper() const noexcept { return P_; }
    bool is_table() const noexcept { return !knots_.empty(); }
    const std::vector<double>& knots() const noexcept { return knots_; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    NonlocalCoefficient(double p, double P) : p_(p), P_(P) {}

    double p_;
    double P_;
    double lipschitz_ = 0.0;
    std::vector<double> knots_;
    std::vector<double> values_;
};

struct DriftParams {
    double nu = 1.0;  ///< linear kind: A(t,w,v) = ν·Δv
    double q = 4.0;   ///< reaction exponent, q >= 2
    NonlocalCoefficient coefficient = NonlocalCoefficient::rational(0.25, 1.0);
    double J = 0.5;   ///< semilinear kind: f(x) = J·tanh(x), |f| ≤ J < 1
};

class DriftOperator {
public:
    DriftOperator(DriftKind kind, DriftParams params);

    static DriftOperator linear(double nu = 1.0);
    static DriftOperator reaction_diffusion(double q = 4.0);
    static DriftOperator nonlocal(NonlocalCoefficient a = NonlocalCoefficient::rational(0.25, 1.0));
    static DriftOperator semilinear(double J = 0.5);

    DriftKind kind() const noexcept { return kind_; }
    const DriftParams& params() const noexcept { return params_; }

    /// Coefficient of Δ_h v; depends on w only for the nonlocal kind.
    double diffusion(const StateVector& w, const Grid& g) const;
    /// Non-Laplacian part N(w, v), evaluated nodally.
    StateVector remainder(const StateVector& w, const StateVector& v, const Grid& g) const;
    /// Nodal V'-representative of A(t, w, v).
    StateVector apply(double t, const StateVector& w, const StateVector& v, const Grid& g) const;
    /// ⟨A(t, w, v), z⟩ with the Laplacian part paired by discrete integration by parts.
    double pairing(double t, const StateVector& w, const StateVector& v, const StateVector& z,
                   const Grid& g) const;

    bool linear_in_second_slot() const noexcept {
        return kind_ == DriftKind::linear || kind_ == DriftKind::nonlocal;
    }

    /// Semilinear transport coefficient f(x) = J·tanh(x).
    double transport(double x) const;

private:
    void check_inputs(const StateVector& w, const StateVector& v, const Grid& g) const;

    DriftKind kind_;
    DriftParams params_;
};

/// Multiplicative modal noise: mode j of Ξ(t, u) is σ_j·ramp(t)·(u ⊙ e_j),
/// ramp(t) = min(t/t_r, 1), so Ξ(0, ·) = 0.
class NoiseOperator {
public:
    NoiseOperator(std::vector<double> sigma, double ramp_time);

    /// σ_j = amplitude·j^{-decay}, j = 1..m.
    static NoiseOperator decaying(std::size_t m_modes, double amplitude, double decay,
                                  double ramp_time);
    static NoiseOperator off(std::size_t m_modes = 1) {
        return NoiseOperator(std::vector<double>(m_modes, 0.0), 1.0);
    }

    std::size_t m_modes() const noexcept { return sigma_.size(); }
    const std::vector<double>& sigma() const noexcept { return sigma_; }
    double ramp_time() const noexcept { return ramp_time_; }
    double ramp(double t) const noexcept;
    bool is_off() const noexcept;

    std::vector<StateVector> apply(double t, const StateVector& u, const Grid& g) const;
    /// ‖Ξ(t, u)‖₂²
    double hs_norm_sq(double t, const StateVector& u, const Grid& g) const;
    /// ‖Ξ(t, u1) - Ξ(t, u2)‖₂²
    double hs_distance_sq(double t, const StateVector& u1, const StateVector& u2,
                          const Grid& g) const;
    /// L = Σ_j σ_j²·max_i e_j(x_i)², so that hs_distance_sq ≤ L·‖u1 - u2‖².
    double lipschitz_constant(const Grid& g) const;
    /// Σ_j Ξ_j(t, u)·dW_j for one Wiener increment row.
    StateVector increment(double t, const StateVector& u, std::span<const double> dW,
                          const Grid& g) const;

private:
    void check_grid(const Grid& g) const;

    std::vector<double> sigma_;
    double ramp_time_;
};

/// ρ(v) = coefficient·‖v‖_V^exponent.
struct RhoForm {
    double coefficient = 0.0;
    double exponent = 2.0;

    double operator()(const StateVector& v, const Grid& g) const;
};

/// Constants of the dual-norm growth bound
/// ‖A(t,v,v1)‖²_{V'} ≤ θ2‖v1‖_V² + p3‖v‖²‖v‖_V² + p4‖v1‖²‖v1‖_V² + p5.
struct DualGrowthConstants {
    double theta2 = 0.0;
    double p3 = 0.0;
    double p4 = 0.0;
    double p5 = 0.0;
};

/// Declared constants of the structural conditions for one (drift, noise, control budget).
struct ConditionConstants {
    double theta = 0.0;  ///< coercivity rate
    double K = 0.0;      ///< shared monotonicity / coercivity / growth constant
    double beta = 2.0;   ///< growth exponent
    std::optional<RhoForm> rho;
    double K1 = 0.0;
    double J1 = 0.0;
    double theta1 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double c4 = 0.0;
    double c5 = 0.0;
    std::optional<DualGrowthConstants> dual_growth;
    double L = 0.0;      ///< noise Lipschitz constant
    double alpha = 0.0;  ///< control state-Lipschitz budget the constants were derived for
};

/// Constants for `drift` with noise Lipschitz constant `noise_L` and control budget `alpha`.
///
/// Uses the published per-example constants where they exist and closed-form
/// derivations (with the grid-independent embedding bound 1/8) where only
/// "suitable constants" are asserted. The reaction–diffusion dual growth row is
/// left empty for q > 3, where no bound of that form exists.
ConditionConstants declared_constants(const DriftOperator& drift, double noise_L, double alpha);

}  // namespace locmono
