#pragma once

// Semi-implicit Euler–Maruyama paths: the Laplacian part of the drift is implicit
// (coefficient frozen at the left endpoint), the remaining drift is explicit and
// tamed, noise and control are evaluated at the left endpoint.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "locmono/controls.hpp"
#include "locmono/operators.hpp"
#include "locmono/spaces.hpp"

namespace locmono {

struct TimeGrid {
    double T = 1.0;
    std::size_t n_steps = 100;

    TimeGrid() = default;
    TimeGrid(double T, std::size_t n_steps);

    double dt() const noexcept { return T / static_cast<double>(n_steps); }
    double time(std::size_t k) const noexcept { return T * static_cast<double>(k) / static_cast<double>(n_steps); }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// n_steps × m_modes Gaussian increments with variance dt, generated from (seed, path_index).
class WienerPath {
public:
    WienerPath(std::uint64_t seed, std::size_t path_index, std::size_t n_steps,
               std::size_t m_modes, double dt, std::uint64_t stream = 1);
    /// Wraps explicit increments (row-major n_steps × m_modes).
    static WienerPath from_increments(std::vector<double> increments, std::size_t n_steps,
                                      std::size_t m_modes, std::size_t path_index = 0);

    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t path_index() const noexcept { return path_index_; }
    std::size_t n_steps() const noexcept { return n_steps_; }
    std::size_t m_modes() const noexcept { return m_modes_; }
    std::span<const double> step(std::size_t k) const;
    const std::vector<double>& increments() const noexcept { return increments_; }

    /// Sums each block of `factor` consecutive steps: the same Brownian path on a
    /// grid with `factor`-times larger dt.
    WienerPath coarsened(std::size_t factor) const;

private:
    WienerPath() = default;

    std::uint64_t seed_ = 0;
    std::size_t path_index_ = 0;
    std::size_t n_steps_ = 0;
    std::size_t m_modes_ = 0;
    std::vector<double> increments_;
};

/// Common-random-number set: a fixed list of Wiener paths identified by `tag`.
struct CrnSet {
    std::uint64_t seed = 0;
    std::uint64_t stream = 1;
    std::string tag;
    std::vector<WienerPath> paths;

    /// Paths 0..n_paths-1 of stream `stream` under `seed`.
    static CrnSet make(std::uint64_t seed, std::size_t n_paths, const TimeGrid& tg,
                       std::size_t m_modes, std::uint64_t stream = 1);
    /// Independent set of the same size, for held-out estimates.
    static CrnSet fresh(std::uint64_t seed, std::size_t n_paths, const TimeGrid& tg,
                        std::size_t m_modes);

    std::size_t size() const noexcept { return paths.size(); }
};

enum class TrajectoryMode { full, auxiliary, control_free };

struct Trajectory {
    TrajectoryMode mode = TrajectoryMode::full;
    std::size_t path_index = 0;
    std::vector<StateVector> states;
    std::vector<double> h_norms;
    std::vector<double> v_norms;
    /// Path index of the base trajectory for auxiliary and control-free modes.
    std::optional<std::size_t> frozen_source;

    std::size_t n_steps() const noexcept { return states.empty() ? 0 : states.size() - 1; }
};

/// Drift, noise and the initial condition.
struct ModelBundle {
    DriftOperator drift;
    NoiseOperator noise;
    StateVector u0;
};

Trajectory simulate(const DriftOperator& drift, const NoiseOperator& noise,
                    const FeedbackControl& control, const StateVector& u0, const TimeGrid& tg,
                    const WienerPath& w, const Grid& grid);

/// Frozen-drift equation: first drift slot, noise and control are evaluated on `base`.
Trajectory simulate_auxiliary(const DriftOperator& drift, const NoiseOperator& noise,
                              const FeedbackControl& control_n, const Trajectory& base,
                              const StateVector& u0, const TimeGrid& tg, const WienerPath& w,
                              const Grid& grid);

/// As simulate_auxiliary without a control term.
Trajectory simulate_control_free(const DriftOperator& drift, const NoiseOperator& noise,
                                 const Trajectory& base, const StateVector& u0,
                                 const TimeGrid& tg, const WienerPath& w, const Grid& grid);

/// Full-mode paths for every member of `crn`, in path order.
std::vector<Trajectory> simulate_paths(const ModelBundle& model, const FeedbackControl& control,
                                       const TimeGrid& tg, const CrnSet& crn, const Grid& grid,
                                       unsigned threads = 1);

struct EnergyReport {
    std::size_t n_paths = 0;
    double e_sup_h2 = 0.0;      ///< E sup_t ‖u‖²
    double e_int_v2 = 0.0;      ///< E ∫‖u‖_V² dt
    double e_sup_h4 = 0.0;      ///< E sup_t ‖u‖⁴
    double e_int_h2_sq = 0.0;   ///< (E ∫‖u‖² dt)²
    double e_u0_h2 = 0.0;       ///< E ‖u0‖²
    std::optional<double> c_hat;  ///< (E sup‖u‖² + E∫‖u‖_V²) / E‖u0‖², absent when u0 = 0
    double c_hat_se = 0.0;      ///< standard error from per-path ratios
};

/// Monte Carlo energy statistics; integrals use the left-endpoint rule.
EnergyReport energy_statistics(const std::vector<Trajectory>& trajs, const Grid& grid,
                               const TimeGrid& tg);

/// Columns path_id, step, t, h_norm, v_norm.
void write_norms_csv(std::ostream& os, const std::vector<Trajectory>& trajs, const TimeGrid& tg);
/// Columns path_id, step, t, then one column per node.
void write_states_csv(std::ostream& os, const std::vector<Trajectory>& trajs, const TimeGrid& tg);

/// printf("%.17g") formatting used by every CSV writer.
std::string format_double(double x);

}  // namespace locmono
