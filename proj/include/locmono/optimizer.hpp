#pragma once

// Minimizing sequences over the admissible control family: Nelder–Mead on the flat
// parameter vector with every proposed point projected, a fixed CRN set during the
// search and a held-out set for the final estimate.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "locmono/controls.hpp"
#include "locmono/cost.hpp"
#include "locmono/solver.hpp"

namespace locmono {

struct SearchConfig {
    std::size_t max_evals = 200;
    double init_scale = 0.25;  ///< initial simplex edge, relative to each coordinate's budget
    std::size_t crn_paths = 64;
    std::vector<std::size_t> free_indices;  ///< searched flat coordinates; empty means all
    double restart_diameter = 1e-9;
    std::size_t max_restarts = 2;
    unsigned threads = 1;

    void validate(const ControlShape& shape) const;
};

struct Iterate {
    std::size_t index = 0;
    std::vector<double> params;  ///< projected flat parameters
    CostEstimate estimate;
    double best_so_far = 0.0;
    bool improving = false;  ///< strictly lowered best_so_far
};

struct OptimizationRecord {
    std::vector<Iterate> iterates;
    FeedbackControl final_control;
    CostEstimate final_estimate;  ///< final control on the search CRN set
    CostEstimate fresh_estimate;  ///< final control on an independent CRN set
    std::uint64_t seed = 0;
    SearchConfig search;
};

OptimizationRecord minimize(const CostSpec& spec, const ModelBundle& model, const TimeGrid& tg,
                            const Grid& grid, const ControlShape& shape,
                            const AdmissibleBounds& bounds, const SearchConfig& search,
                            std::uint64_t seed, const std::vector<double>& start = {});

struct GridPoint {
    double value = 0.0;
    CostEstimate estimate;
};

/// Brute-force scan of gain `gain_index` over [-√(α/2), √(α/2)] at `points` values,
/// all other parameters taken from `base` (projected).
std::vector<GridPoint> grid_search(const CostSpec& spec, const ModelBundle& model,
                                   const TimeGrid& tg, const Grid& grid, const ControlShape& shape,
                                   const AdmissibleBounds& bounds, const CrnSet& crn,
                                   std::size_t gain_index, std::size_t points,
                                   const std::vector<double>& base = {}, unsigned threads = 1);

enum class TruncationKind { both, integral, sup };

/// First step k with ∫_0^{t_k}‖u‖_V² ≥ M or sup_{j≤k}‖u_j‖² ≥ M (per `kind`), else n_steps.
std::size_t truncation_rule(const Trajectory& traj, double M, const TimeGrid& tg,
                            TruncationKind kind = TruncationKind::both);

struct DiagnosticEntry {
    std::size_t iterate = 0;
    double D_V = 0.0;
    double D_H_T = 0.0;
    double aux_D_V = 0.0;
    double aux_D_H_T = 0.0;
    double D_V_trunc = 0.0;      ///< D_V on [0, T_M] (equals D_V without M)
    double aux_D_V_trunc = 0.0;
};

struct ConvergenceDiagnostics {
    std::vector<DiagnosticEntry> entries;
    std::optional<double> truncation_M;
    std::vector<std::size_t> truncation_index;  ///< per path, for the Φ* path
    bool D_V_monotone = false;
    bool D_H_T_monotone = false;
    bool aux_D_V_monotone = false;
    bool aux_D_H_T_monotone = false;
};

/// Distances of the last `tail_k` improving iterates to Φ* = record.final_control
/// on the shared CRN set. Throws InsufficientDataError with fewer than
/// `min_improving` improving iterates.
ConvergenceDiagnostics diagnose_convergence(const OptimizationRecord& record, std::size_t tail_k,
                                            const ModelBundle& model, const TimeGrid& tg,
                                            const CrnSet& crn, const Grid& grid,
                                            std::optional<double> M = std::nullopt,
                                            unsigned threads = 1, std::size_t min_improving = 2);

/// Columns iterate, cost, std_error, best_so_far, D_V, D_H_T (blank when not diagnosed).
void write_iterates_csv(std::ostream& os, const OptimizationRecord& record,
                        const ConvergenceDiagnostics* diagnostics = nullptr);
void write_diagnostics_csv(std::ostream& os, const ConvergenceDiagnostics& d);
void write_grid_csv(std::ostream& os, const std::vector<GridPoint>& points);

/// JSON form of the record; `model_hash` ties it to the configuration that produced it.
std::string record_json(const OptimizationRecord& record, const std::string& model_hash);
/// Inverse of record_json; the shape and bounds are taken from the caller's configuration.
OptimizationRecord parse_record_json(const std::string& text, const ControlShape& shape,
                                     const AdmissibleBounds& bounds, std::string* model_hash);

}  // namespace locmono
