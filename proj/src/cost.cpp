#include "locmono/cost.hpp"

#include <cmath>

#include "locmono/errors.hpp"
#include "locmono/parallel.hpp"
#include "locmono/stats.hpp"

namespace locmono {

void CostSpec::validate(const Grid& g, const TimeGrid& tg) const {
    auto check_weight = [](double w, const char* key) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ConfigError("weight must be finite and >= 0", key);
        }
    };
    check_weight(running_weight, "cost.running_weight");
    check_weight(control_weight, "cost.control_weight");
    check_weight(terminal_weight, "cost.terminal_weight");
    if (u_ref.size() != 1 && u_ref.size() != tg.n_steps + 1) {
        throw ConfigError("u_ref needs one state or n_steps + 1 states", "cost.u_ref");
    }
    for (const auto& r : u_ref) g.check(r);
    g.check(u_T);
}

const StateVector& CostSpec::reference(std::size_t k) const {
    return u_ref.size() == 1 ? u_ref.front() : u_ref.at(k);
}

CostSpec zero_target_cost(const Grid& g, double running_weight, double control_weight,
                          double terminal_weight) {
    CostSpec spec;
    spec.running_weight = running_weight;
    spec.control_weight = control_weight;
    spec.terminal_weight = terminal_weight;
    spec.u_ref = {g.zeros()};
    spec.u_T = g.zeros();
    return spec;
}

double pathwise_cost(const CostSpec& spec, const Trajectory& traj, const FeedbackControl& control,
                     const TimeGrid& tg, const Grid& grid) {
    if (traj.mode != TrajectoryMode::full) {
        throw UsageError("pathwise cost is defined for full-mode trajectories only");
    }
    if (traj.states.size() != tg.n_steps + 1) {
        throw ConformanceError("trajectory does not match the time grid");
    }
    spec.validate(grid, tg);
    const double dt = tg.dt();
    std::vector<double> running(tg.n_steps, 0.0);
    for (std::size_t k = 0; k < tg.n_steps; ++k) {
        double c = 0.0;
        if (spec.running_weight != 0.0) {
            const double d = v_norm(traj.states[k] - spec.reference(k), grid);
            c += spec.running_weight * d * d;
        }
        if (spec.control_weight != 0.0 && !control.is_zero()) {
            const double p = h_norm(control.eval(tg.time(k), traj.states[k], grid), grid);
            c += spec.control_weight * p * p;
        }
        running[k] = dt * c;
    }
    double total = pairwise_sum(running);
    if (spec.terminal_weight != 0.0) {
        const double e = h_norm(traj.states.back() - spec.u_T, grid);
        total += spec.terminal_weight * e * e;
    }
    return total;
}

CostEstimate evaluate_cost(const CostSpec& spec, const FeedbackControl& control,
                           const ModelBundle& model, const TimeGrid& tg, const CrnSet& crn,
                           const Grid& grid, unsigned threads) {
    if (crn.size() == 0) throw InsufficientDataError("cost estimate needs at least one path");
    spec.validate(grid, tg);
    CostEstimate est;
    est.n_paths = crn.size();
    est.crn_tag = crn.tag;
    est.per_path.assign(crn.size(), 0.0);
    parallel_for(crn.size(), threads, [&](std::size_t i) {
        const Trajectory tr =
            simulate(model.drift, model.noise, control, model.u0, tg, crn.paths[i], grid);
        est.per_path[i] = pathwise_cost(spec, tr, control, tg, grid);
    });
    est.mean = sample_mean(est.per_path);
    est.std_error = standard_error(est.per_path);
    return est;
}

}  // namespace locmono
