#pragma once

// Quadratic tracking cost
//   J(Φ) = E[ Σ_k dt·(w_run‖u_k - u_ref,k‖_V² + κ‖Φ(t_k, u_k)‖²) + w_T‖u_N - u_T‖² ]
// with the left-endpoint rule on the solver's time grid.

#include <cstddef>
#include <string>
#include <vector>

#include "locmono/controls.hpp"
#include "locmono/solver.hpp"
#include "locmono/spaces.hpp"

namespace locmono {

struct CostSpec {
    double running_weight = 1.0;
    double control_weight = 0.0;  ///< κ
    double terminal_weight = 1.0;
    /// Either one state (constant in time) or n_steps + 1 states.
    std::vector<StateVector> u_ref;
    StateVector u_T;

    void validate(const Grid& g, const TimeGrid& tg) const;
    const StateVector& reference(std::size_t k) const;
    bool all_weights_zero() const noexcept {
        return running_weight == 0.0 && control_weight == 0.0 && terminal_weight == 0.0;
    }
};

/// Spec with u_ref ≡ u_T ≡ 0.
CostSpec zero_target_cost(const Grid& g, double running_weight, double control_weight,
                          double terminal_weight);

struct CostEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::string crn_tag;
    std::vector<double> per_path;
};

/// Cost of one full-mode trajectory.
double pathwise_cost(const CostSpec& spec, const Trajectory& traj, const FeedbackControl& control,
                     const TimeGrid& tg, const Grid& grid);

/// Mean and standard error of pathwise_cost over the CRN set.
CostEstimate evaluate_cost(const CostSpec& spec, const FeedbackControl& control,
                           const ModelBundle& model, const TimeGrid& tg, const CrnSet& crn,
                           const Grid& grid, unsigned threads = 1);

}  // namespace locmono
