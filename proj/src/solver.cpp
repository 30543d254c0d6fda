#include "locmono/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "locmono/errors.hpp"
#include "locmono/parallel.hpp"
#include "locmono/rng.hpp"
#include "locmono/stats.hpp"

namespace locmono {

TimeGrid::TimeGrid(double T_, std::size_t n) : T(T_), n_steps(n) {
    if (!(T > 0.0) || !std::isfinite(T)) throw ParameterError("time horizon T must be > 0");
    if (n_steps == 0) throw ParameterError("n_steps must be >= 1");
}

// ---------------------------------------------------------------------------
// Wiener paths

WienerPath::WienerPath(std::uint64_t seed, std::size_t path_index, std::size_t n_steps,
                       std::size_t m_modes, double dt, std::uint64_t stream)
    : seed_(seed), path_index_(path_index), n_steps_(n_steps), m_modes_(m_modes),
      increments_(n_steps * m_modes) {
    if (!(dt > 0.0)) throw ParameterError("Wiener increments need dt > 0");
    RandomStream rng(seed, stream, path_index);
    const double sd = std::sqrt(dt);
    for (double& x : increments_) x = sd * rng.normal();
}

WienerPath WienerPath::from_increments(std::vector<double> increments, std::size_t n_steps,
                                       std::size_t m_modes, std::size_t path_index) {
    if (increments.size() != n_steps * m_modes) {
        throw ConformanceError("increment array does not match n_steps × m_modes");
    }
    WienerPath w;
    w.path_index_ = path_index;
    w.n_steps_ = n_steps;
    w.m_modes_ = m_modes;
    w.increments_ = std::move(increments);
    return w;
}

std::span<const double> WienerPath::step(std::size_t k) const {
    if (k >= n_steps_) throw RangeError("Wiener step index out of range");
    return std::span<const double>(increments_).subspan(k * m_modes_, m_modes_);
}

WienerPath WienerPath::coarsened(std::size_t factor) const {
    if (factor == 0 || n_steps_ % factor != 0) {
        throw ParameterError("coarsening factor must divide n_steps");
    }
    WienerPath w;
    w.seed_ = seed_;
    w.path_index_ = path_index_;
    w.n_steps_ = n_steps_ / factor;
    w.m_modes_ = m_modes_;
    w.increments_.assign(w.n_steps_ * m_modes_, 0.0);
    for (std::size_t k = 0; k < w.n_steps_; ++k) {
        for (std::size_t j = 0; j < m_modes_; ++j) {
            double s = 0.0;
            for (std::size_t f = 0; f < factor; ++f) s += increments_[(k * factor + f) * m_modes_ + j];
            w.increments_[k * m_modes_ + j] = s;
        }
    }
    return w;
}

CrnSet CrnSet::make(std::uint64_t seed, std::size_t n_paths, const TimeGrid& tg,
                    std::size_t m_modes, std::uint64_t stream) {
    CrnSet set;
    set.seed = seed;
    set.stream = stream;
    set.tag = "seed=" + std::to_string(seed) + ";stream=" + std::to_string(stream) +
              ";paths=" + std::to_string(n_paths) + ";steps=" + std::to_string(tg.n_steps) +
              ";modes=" + std::to_string(m_modes);
    set.paths.reserve(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) {
        set.paths.emplace_back(seed, i, tg.n_steps, m_modes, tg.dt(), stream);
    }
    return set;
}

CrnSet CrnSet::fresh(std::uint64_t seed, std::size_t n_paths, const TimeGrid& tg,
                     std::size_t m_modes) {
    return make(seed, n_paths, tg, m_modes, streams::fresh_crn);
}

// ---------------------------------------------------------------------------
// Stepping

namespace {

// Which state each coefficient sees at step k.
struct Slots {
    const StateVector* drift;    // first drift slot
    const StateVector* noise;    // Ξ argument
    const StateVector* control;  // Φ argument; nullptr means no control term
};

StateVector advance(const DriftOperator& drift, const NoiseOperator& noise,
                    const FeedbackControl* control, double t, double dt, const StateVector& u,
                    const Slots& slots, std::span<const double> dW, const Grid& g) {
    StateVector rhs = u;
    if (!drift.linear_in_second_slot()) {
        StateVector n = drift.remainder(*slots.drift, u, g);
        const double tame = 1.0 / (1.0 + dt * h_norm(n, g));
        rhs.axpy(dt * tame, n);
    }
    if (control != nullptr && slots.control != nullptr && !control->is_zero()) {
        rhs.axpy(dt, control->eval(t, *slots.control, g));
    }
    if (!noise.is_off()) rhs += noise.increment(t, *slots.noise, dW, g);
    return g.solve_shifted(dt * drift.diffusion(*slots.drift, g), rhs);
}

void record_norms(Trajectory& tr, const Grid& g) {
    tr.h_norms.reserve(tr.states.size());
    tr.v_norms.reserve(tr.states.size());
    for (const auto& s : tr.states) {
        tr.h_norms.push_back(h_norm(s, g));
        tr.v_norms.push_back(v_norm(s, g));
    }
}

void check_setup(const NoiseOperator& noise, const StateVector& u0, const TimeGrid& tg,
                 const WienerPath& w, const Grid& g) {
    g.check(u0);
    if (!u0.all_finite()) throw NumericDomainError("initial condition is not finite");
    if (w.m_modes() != noise.m_modes()) {
        throw ConformanceError("Wiener path has " + std::to_string(w.m_modes()) +
                               " modes, noise has " + std::to_string(noise.m_modes()));
    }
    if (w.n_steps() != tg.n_steps) {
        throw ConformanceError("Wiener path has " + std::to_string(w.n_steps()) +
                               " steps, time grid has " + std::to_string(tg.n_steps));
    }
}

// base == nullptr: full equation; otherwise the frozen-coefficient equation along base.
Trajectory run(const DriftOperator& drift, const NoiseOperator& noise,
               const FeedbackControl* control, const Trajectory* base, TrajectoryMode mode,
               const StateVector& u0, const TimeGrid& tg, const WienerPath& w, const Grid& g) {
    check_setup(noise, u0, tg, w, g);
    if (base != nullptr) {
        if (base->states.size() != tg.n_steps + 1) {
            throw ConformanceError("base trajectory does not match the time grid");
        }
        g.check(base->states.front());
    }
    Trajectory tr;
    tr.mode = mode;
    tr.path_index = w.path_index();
    if (base != nullptr) tr.frozen_source = base->path_index;
    tr.states.reserve(tg.n_steps + 1);
    tr.states.push_back(u0);
    const double dt = tg.dt();
    for (std::size_t k = 0; k < tg.n_steps; ++k) {
        const StateVector& u = tr.states.back();
        const StateVector& frozen = base != nullptr ? base->states[k] : u;
        const Slots slots{&frozen, &frozen, control != nullptr ? &frozen : nullptr};
        StateVector next = advance(drift, noise, control, tg.time(k), dt, u, slots, w.step(k), g);
        if (!next.all_finite()) throw DivergenceError(k + 1, w.path_index());
        tr.states.push_back(std::move(next));
    }
    record_norms(tr, g);
    return tr;
}

}  // namespace

Trajectory simulate(const DriftOperator& drift, const NoiseOperator& noise,
                    const FeedbackControl& control, const StateVector& u0, const TimeGrid& tg,
                    const WienerPath& w, const Grid& grid) {
    return run(drift, noise, &control, nullptr, TrajectoryMode::full, u0, tg, w, grid);
}

Trajectory simulate_auxiliary(const DriftOperator& drift, const NoiseOperator& noise,
                              const FeedbackControl& control_n, const Trajectory& base,
                              const StateVector& u0, const TimeGrid& tg, const WienerPath& w,
                              const Grid& grid) {
    return run(drift, noise, &control_n, &base, TrajectoryMode::auxiliary, u0, tg, w, grid);
}

Trajectory simulate_control_free(const DriftOperator& drift, const NoiseOperator& noise,
                                 const Trajectory& base, const StateVector& u0,
                                 const TimeGrid& tg, const WienerPath& w, const Grid& grid) {
    return run(drift, noise, nullptr, &base, TrajectoryMode::control_free, u0, tg, w, grid);
}

std::vector<Trajectory> simulate_paths(const ModelBundle& model, const FeedbackControl& control,
                                       const TimeGrid& tg, const CrnSet& crn, const Grid& grid,
                                       unsigned threads) {
    std::vector<Trajectory> out(crn.size());
    parallel_for(crn.size(), threads, [&](std::size_t i) {
        out[i] = simulate(model.drift, model.noise, control, model.u0, tg, crn.paths[i], grid);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Energy statistics

EnergyReport energy_statistics(const std::vector<Trajectory>& trajs, const Grid& grid,
                               const TimeGrid& tg) {
    if (trajs.empty()) throw InsufficientDataError("energy statistics need at least one path");
    const std::size_t n = trajs.size();
    const double dt = tg.dt();
    std::vector<double> sup2(n), intv(n), sup4(n), inth(n), u0h(n), ratio(n);
    for (std::size_t p = 0; p < n; ++p) {
        const auto& tr = trajs[p];
        if (tr.states.size() != tg.n_steps + 1) {
            throw ConformanceError("trajectory does not match the time grid");
        }
        grid.check(tr.states.front());
        double s = 0.0;
        std::vector<double> v2(tg.n_steps), h2(tg.n_steps);
        for (std::size_t k = 0; k <= tg.n_steps; ++k) {
            const double hk = tr.h_norms[k] * tr.h_norms[k];
            s = std::max(s, hk);
            if (k < tg.n_steps) {
                v2[k] = dt * tr.v_norms[k] * tr.v_norms[k];
                h2[k] = dt * hk;
            }
        }
        sup2[p] = s;
        sup4[p] = s * s;
        intv[p] = pairwise_sum(v2);
        inth[p] = pairwise_sum(h2);
        u0h[p] = tr.h_norms[0] * tr.h_norms[0];
        ratio[p] = u0h[p] > 0.0 ? (sup2[p] + intv[p]) / u0h[p] : 0.0;
    }
    EnergyReport r;
    r.n_paths = n;
    r.e_sup_h2 = sample_mean(sup2);
    r.e_int_v2 = sample_mean(intv);
    r.e_sup_h4 = sample_mean(sup4);
    const double eh = sample_mean(inth);
    r.e_int_h2_sq = eh * eh;
    r.e_u0_h2 = sample_mean(u0h);
    if (r.e_u0_h2 > 0.0) {
        r.c_hat = (r.e_sup_h2 + r.e_int_v2) / r.e_u0_h2;
        r.c_hat_se = standard_error(ratio);
    }
    return r;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_norms_csv(std::ostream& os, const std::vector<Trajectory>& trajs, const TimeGrid& tg) {
    os << "path_id,step,t,h_norm,v_norm\r\n";
    for (const auto& tr : trajs) {
        for (std::size_t k = 0; k < tr.states.size(); ++k) {
            os << tr.path_index << ',' << k << ',' << format_double(tg.time(k)) << ','
               << format_double(tr.h_norms[k]) << ',' << format_double(tr.v_norms[k]) << "\r\n";
        }
    }
}

void write_states_csv(std::ostream& os, const std::vector<Trajectory>& trajs, const TimeGrid& tg) {
    const std::size_t n = trajs.empty() || trajs.front().states.empty()
                              ? 0
                              : trajs.front().states.front().size();
    os << "path_id,step,t";
    for (std::size_t i = 0; i < n; ++i) os << ",u" << i + 1;
    os << "\r\n";
    for (const auto& tr : trajs) {
        for (std::size_t k = 0; k < tr.states.size(); ++k) {
            os << tr.path_index << ',' << k << ',' << format_double(tg.time(k));
            for (std::size_t i = 0; i < tr.states[k].size(); ++i) {
                os << ',' << format_double(tr.states[k][i]);
            }
            os << "\r\n";
        }
    }
}

}  // namespace locmono
