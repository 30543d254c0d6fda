#pragma once

// Admissible feedback controls Φ(t, x) = g(t) + Σ_k γ_k⟨x, e_k⟩e_k.
//
// g is piecewise linear in t over uniform knots on [0, T]; each knot holds the
// coefficients of g in the first m_c sine modes, so h_norm(g(t)) is the Euclidean
// norm of the interpolated coefficient row.

#include <cstddef>
#include <span>
#include <vector>

#include "locmono/spaces.hpp"

namespace locmono {

struct AdmissibleBounds {
    double eta = 1.0;     ///< ‖Φ(0,0)‖² ≤ η
    double lambda = 1.0;  ///< time-Lipschitz budget
    double alpha = 1.0;   ///< state-Lipschitz budget

    /// Throws ParameterError unless all three are finite and > 0.
    void validate() const;
    double gain_limit() const;   ///< √(α/2)
    double slope_limit() const;  ///< √(λ/2)

    friend bool operator==(const AdmissibleBounds&, const AdmissibleBounds&) = default;
};

struct ControlShape {
    std::size_t m_c = 4;    ///< controlled modes (gains and offset modes)
    std::size_t knots = 9;  ///< offset knots on [0, T], >= 1
    double T = 1.0;

    void validate() const;
    std::size_t flat_size() const noexcept { return m_c + knots * m_c; }
    double knot_spacing() const noexcept;

    friend bool operator==(const ControlShape&, const ControlShape&) = default;
};

class FeedbackControl {
public:
    /// Flat layout: [γ_1..γ_{m_c}, knot 0 coefficients, knot 1 coefficients, ...].
    /// Throws ParameterError when the parameters are not admissible; use
    /// project_admissible for raw parameters.
    FeedbackControl(ControlShape shape, AdmissibleBounds bounds, std::vector<double> flat);

    static FeedbackControl zero(ControlShape shape, AdmissibleBounds bounds);

    const ControlShape& shape() const noexcept { return shape_; }
    const AdmissibleBounds& bounds() const noexcept { return bounds_; }
    const std::vector<double>& flat() const noexcept { return flat_; }
    std::span<const double> gammas() const noexcept;
    std::span<const double> knot(std::size_t i) const;
    bool is_zero() const noexcept;

    /// Mode coefficients of g(t).
    std::vector<double> offset_coefficients(double t) const;
    StateVector offset(double t, const Grid& g) const;
    StateVector eval(double t, const StateVector& x, const Grid& g) const;

    friend bool operator==(const FeedbackControl&, const FeedbackControl&) = default;

private:
    void check_time(double t) const;
    void check_grid(const Grid& g) const;

    ControlShape shape_;
    AdmissibleBounds bounds_;
    std::vector<double> flat_;
};

/// True when the flat parameters satisfy the gain, slope and initial-value bounds.
bool is_admissible(std::span<const double> flat, const ControlShape& shape,
                   const AdmissibleBounds& bounds);

/// Clamps gains, rescales g(0) onto the η-ball and shrinks knot increments that
/// exceed the slope budget. Admissible input is returned bit-for-bit unchanged.
FeedbackControl project_admissible(std::span<const double> raw, const ControlShape& shape,
                                   const AdmissibleBounds& bounds);

}  // namespace locmono
