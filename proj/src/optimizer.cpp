#include "locmono/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "locmono/errors.hpp"
#include "locmono/parallel.hpp"
#include "locmono/stats.hpp"

namespace locmono {

void SearchConfig::validate(const ControlShape& shape) const {
    if (max_evals == 0) throw ConfigError("max_evals must be >= 1", "run.max_evals");
    if (!(init_scale > 0.0) || !std::isfinite(init_scale)) {
        throw ConfigError("init_scale must be > 0", "run.init_scale");
    }
    if (crn_paths == 0) throw ConfigError("need at least one CRN path", "run.paths");
    for (std::size_t i : free_indices) {
        if (i >= shape.flat_size()) {
            throw ConfigError("free index " + std::to_string(i) + " outside the parameter vector",
                              "control.free");
        }
    }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Evaluates projected points and appends every evaluation to the iterate list.
class Objective {
public:
    Objective(const CostSpec& spec, const ModelBundle& model, const TimeGrid& tg, const Grid& grid,
              const ControlShape& shape, const AdmissibleBounds& bounds, const CrnSet& crn,
              unsigned threads)
        : spec_(spec), model_(model), tg_(tg), grid_(grid), shape_(shape), bounds_(bounds),
          crn_(crn), threads_(threads) {}

    // Projects x in place and returns its cost (inf on divergence).
    double operator()(std::vector<double>& x) {
        const FeedbackControl c = project_admissible(x, shape_, bounds_);
        x = c.flat();
        for (double v : x) {
            if (!std::isfinite(v)) throw InternalError("non-finite parameters after projection");
        }
        Iterate it;
        it.index = iterates.size();
        it.params = x;
        try {
            it.estimate = evaluate_cost(spec_, c, model_, tg_, crn_, grid_, threads_);
        } catch (const DivergenceError& e) {
            last_failure = e.what();
            it.estimate.mean = kInf;
            it.estimate.std_error = kInf;
            it.estimate.n_paths = crn_.size();
            it.estimate.crn_tag = crn_.tag;
        }
        const double f = it.estimate.mean;
        it.improving = f < best;
        if (it.improving) {
            best = f;
            best_x = x;
        }
        it.best_so_far = best;
        iterates.push_back(std::move(it));
        return f;
    }

    std::size_t evals() const noexcept { return iterates.size(); }

    std::vector<Iterate> iterates;
    double best = kInf;
    std::vector<double> best_x;
    std::string last_failure;

private:
    const CostSpec& spec_;
    const ModelBundle& model_;
    const TimeGrid& tg_;
    const Grid& grid_;
    const ControlShape& shape_;
    const AdmissibleBounds& bounds_;
    const CrnSet& crn_;
    unsigned threads_;
};

struct Vertex {
    std::vector<double> x;  // full projected flat vector
    double f = kInf;
};

double free_distance(const std::vector<double>& a, const std::vector<double>& b,
                     const std::vector<std::size_t>& idx) {
    double s = 0.0;
    for (std::size_t i : idx) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

// a + t·(b - a) on the free coordinates, frozen coordinates from a
std::vector<double> along(const std::vector<double>& a, const std::vector<double>& b, double t,
                          const std::vector<std::size_t>& idx) {
    std::vector<double> out = a;
    for (std::size_t i : idx) out[i] = a[i] + t * (b[i] - a[i]);
    return out;
}

double coordinate_scale(std::size_t i, const ControlShape& shape, const AdmissibleBounds& b) {
    return i < shape.m_c ? b.gain_limit() : std::sqrt(b.eta);
}

}  // namespace

OptimizationRecord minimize(const CostSpec& spec, const ModelBundle& model, const TimeGrid& tg,
                            const Grid& grid, const ControlShape& shape,
                            const AdmissibleBounds& bounds, const SearchConfig& search,
                            std::uint64_t seed, const std::vector<double>& start) {
    shape.validate();
    bounds.validate();
    search.validate(shape);
    spec.validate(grid, tg);
    if (shape.T < tg.T) throw ConfigError("control horizon shorter than run.T", "run.T");

    std::vector<std::size_t> idx = search.free_indices;
    if (idx.empty()) {
        idx.resize(shape.flat_size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    const std::size_t d = idx.size();

    const CrnSet crn = CrnSet::make(seed, search.crn_paths, tg, model.noise.m_modes());
    Objective objective(spec, model, tg, grid, shape, bounds, crn, search.threads);

    std::vector<double> x0 = start.empty() ? std::vector<double>(shape.flat_size(), 0.0) : start;
    if (x0.size() != shape.flat_size()) {
        throw ConformanceError("start vector does not match the control shape");
    }
    Vertex v0{x0, 0.0};
    v0.f = objective(v0.x);

    // coefficients: standard for small d, dimension-adapted otherwise
    const double dd = static_cast<double>(d);
    const double c_refl = 1.0;
    const double c_exp = d <= 2 ? 2.0 : 1.0 + 2.0 / dd;
    const double c_con = d <= 2 ? 0.5 : 0.75 - 1.0 / (2.0 * dd);
    const double c_shr = d <= 2 ? 0.5 : 1.0 - 1.0 / dd;

    auto budget_left = [&] { return objective.evals() < search.max_evals && objective.best > 0.0; };

    auto build_simplex = [&](const Vertex& centre, double scale) {
        std::vector<Vertex> s{centre};
        for (std::size_t j = 0; j < d && budget_left(); ++j) {
            const std::size_t i = idx[j];
            const double step = scale * coordinate_scale(i, shape, bounds);
            Vertex v{centre.x, 0.0};
            v.x[i] += step;
            v.x = project_admissible(v.x, shape, bounds).flat();
            if (free_distance(v.x, centre.x, idx) == 0.0) {
                v.x = centre.x;
                v.x[i] -= step;
            }
            v.f = objective(v.x);
            s.push_back(std::move(v));
        }
        return s;
    };

    std::vector<Vertex> simplex = build_simplex(v0, search.init_scale);
    std::size_t restarts = 0;
    auto order = [](std::vector<Vertex>& s) {
        std::stable_sort(s.begin(), s.end(),
                         [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    };

    while (budget_left() && simplex.size() == d + 1) {
        order(simplex);
        double diameter = 0.0;
        for (std::size_t j = 1; j <= d; ++j) {
            diameter = std::max(diameter, free_distance(simplex[j].x, simplex[0].x, idx));
        }
        if (diameter < search.restart_diameter) {
            if (restarts >= search.max_restarts) break;
            ++restarts;
            const double scale = search.init_scale * std::pow(0.1, static_cast<double>(restarts));
            simplex = build_simplex(simplex[0], scale);
            continue;
        }
        std::vector<double> centroid = simplex[0].x;
        for (std::size_t i : idx) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += simplex[j].x[i];
            centroid[i] = s / dd;
        }
        Vertex& worst = simplex[d];
        Vertex r{along(centroid, worst.x, -c_refl, idx), 0.0};
        r.f = objective(r.x);
        if (r.f < simplex[0].f) {
            if (!budget_left()) {
                worst = std::move(r);
                break;
            }
            Vertex e{along(centroid, r.x, c_exp, idx), 0.0};
            e.f = objective(e.x);
            worst = e.f < r.f ? std::move(e) : std::move(r);
            continue;
        }
        if (r.f < simplex[d - 1].f) {
            worst = std::move(r);
            continue;
        }
        if (!budget_left()) break;
        const bool outside = r.f < worst.f;
        Vertex c{along(centroid, outside ? r.x : worst.x, c_con, idx), 0.0};
        c.f = objective(c.x);
        if (outside ? c.f <= r.f : c.f < worst.f) {
            worst = std::move(c);
            continue;
        }
        for (std::size_t j = 1; j <= d && budget_left(); ++j) {
            simplex[j].x = along(simplex[0].x, simplex[j].x, c_shr, idx);
            simplex[j].f = objective(simplex[j].x);
        }
    }

    if (!std::isfinite(objective.best)) {
        throw OptimizationError("every evaluation diverged; last failure: " +
                                objective.last_failure);
    }
    FeedbackControl best(shape, bounds, objective.best_x);
    const CrnSet fresh = CrnSet::fresh(seed, search.crn_paths, tg, model.noise.m_modes());
    OptimizationRecord rec{std::move(objective.iterates),
                           best,
                           {},
                           evaluate_cost(spec, best, model, tg, fresh, grid, search.threads),
                           seed,
                           search};
    for (const auto& it : rec.iterates) {
        if (it.params == rec.final_control.flat() && it.improving) rec.final_estimate = it.estimate;
    }
    return rec;
}

std::vector<GridPoint> grid_search(const CostSpec& spec, const ModelBundle& model,
                                   const TimeGrid& tg, const Grid& grid, const ControlShape& shape,
                                   const AdmissibleBounds& bounds, const CrnSet& crn,
                                   std::size_t gain_index, std::size_t points,
                                   const std::vector<double>& base, unsigned threads) {
    shape.validate();
    bounds.validate();
    if (gain_index >= shape.m_c) throw ConfigError("grid search runs over a gain index", "--grid-search");
    if (points < 2) throw ConfigError("grid search needs at least 2 points", "--grid-search");
    std::vector<double> x = base.empty() ? std::vector<double>(shape.flat_size(), 0.0) : base;
    x = project_admissible(x, shape, bounds).flat();
    const double g = bounds.gain_limit();
    std::vector<GridPoint> out(points);
    for (std::size_t i = 0; i < points; ++i) {
        out[i].value = -g + 2.0 * g * static_cast<double>(i) / static_cast<double>(points - 1);
        if (i == points - 1) out[i].value = g;
        x[gain_index] = out[i].value;
        const FeedbackControl c(shape, bounds, x);
        out[i].estimate = evaluate_cost(spec, c, model, tg, crn, grid, threads);
    }
    return out;
}

std::size_t truncation_rule(const Trajectory& traj, double M, const TimeGrid& tg,
                            TruncationKind kind) {
    if (!(M > 0.0)) throw ParameterError("truncation level M must be > 0");
    if (traj.states.size() != tg.n_steps + 1) {
        throw ConformanceError("trajectory does not match the time grid");
    }
    const double dt = tg.dt();
    double integral = 0.0, sup = 0.0;
    for (std::size_t k = 0; k <= tg.n_steps; ++k) {
        sup = std::max(sup, traj.h_norms[k] * traj.h_norms[k]);
        const bool hit_int = kind != TruncationKind::sup && integral >= M;
        const bool hit_sup = kind != TruncationKind::integral && sup >= M;
        if (hit_int || hit_sup) return k;
        integral += dt * traj.v_norms[k] * traj.v_norms[k];
    }
    return tg.n_steps;
}

namespace {

struct PairMetrics {
    double d_v = 0.0, d_h = 0.0, d_v_trunc = 0.0;
};

PairMetrics distance(const Trajectory& a, const Trajectory& b, std::size_t tau, const Grid& g,
                     const TimeGrid& tg) {
    std::vector<double> terms(tg.n_steps);
    for (std::size_t k = 0; k < tg.n_steps; ++k) {
        const double v = v_norm(a.states[k] - b.states[k], g);
        terms[k] = tg.dt() * v * v;
    }
    PairMetrics m;
    m.d_v = pairwise_sum(terms);
    m.d_v_trunc = pairwise_sum(std::span<const double>(terms).first(tau));
    const double h = h_norm(a.states.back() - b.states.back(), g);
    m.d_h = h * h;
    return m;
}

bool non_increasing(const std::vector<DiagnosticEntry>& e, double DiagnosticEntry::*field) {
    for (std::size_t i = 1; i < e.size(); ++i) {
        if (e[i].*field > e[i - 1].*field) return false;
    }
    return true;
}

}  // namespace

ConvergenceDiagnostics diagnose_convergence(const OptimizationRecord& record, std::size_t tail_k,
                                            const ModelBundle& model, const TimeGrid& tg,
                                            const CrnSet& crn, const Grid& grid,
                                            std::optional<double> M, unsigned threads,
                                            std::size_t min_improving) {
    std::vector<const Iterate*> improving;
    for (const auto& it : record.iterates) {
        if (it.improving) improving.push_back(&it);
    }
    min_improving = std::max<std::size_t>(min_improving, 1);
    if (improving.size() < min_improving || tail_k < min_improving) {
        throw InsufficientDataError("convergence diagnostics need at least " +
                                    std::to_string(min_improving) + " improving iterates");
    }
    if (tail_k < improving.size()) {
        improving.erase(improving.begin(), improving.end() - static_cast<std::ptrdiff_t>(tail_k));
    }
    if (crn.size() == 0) throw InsufficientDataError("diagnostics need at least one path");
    if (M && !(*M > 0.0)) throw ParameterError("truncation level M must be > 0");

    const FeedbackControl& star = record.final_control;
    const std::size_t P = crn.size();
    std::vector<Trajectory> base(P);
    parallel_for(P, threads, [&](std::size_t p) {
        base[p] = simulate(model.drift, model.noise, star, model.u0, tg, crn.paths[p], grid);
    });
    ConvergenceDiagnostics out;
    out.truncation_M = M;
    out.truncation_index.resize(P, tg.n_steps);
    if (M) {
        for (std::size_t p = 0; p < P; ++p) out.truncation_index[p] = truncation_rule(base[p], *M, tg);
    }

    const std::size_t n_it = improving.size();
    std::vector<PairMetrics> plain(n_it * P), aux(n_it * P);
    parallel_for(n_it * P, threads, [&](std::size_t job) {
        const std::size_t i = job / P, p = job % P;
        const FeedbackControl c(star.shape(), star.bounds(), improving[i]->params);
        const Trajectory u = simulate(model.drift, model.noise, c, model.u0, tg, crn.paths[p], grid);
        const Trajectory a = simulate_auxiliary(model.drift, model.noise, c, base[p], model.u0, tg,
                                                crn.paths[p], grid);
        plain[job] = distance(u, base[p], out.truncation_index[p], grid, tg);
        aux[job] = distance(a, base[p], out.truncation_index[p], grid, tg);
    });

    auto mean_of = [&](const std::vector<PairMetrics>& v, std::size_t i, double PairMetrics::*f) {
        std::vector<double> x(P);
        for (std::size_t p = 0; p < P; ++p) x[p] = v[i * P + p].*f;
        return sample_mean(x);
    };
    for (std::size_t i = 0; i < n_it; ++i) {
        DiagnosticEntry e;
        e.iterate = improving[i]->index;
        e.D_V = mean_of(plain, i, &PairMetrics::d_v);
        e.D_H_T = mean_of(plain, i, &PairMetrics::d_h);
        e.D_V_trunc = mean_of(plain, i, &PairMetrics::d_v_trunc);
        e.aux_D_V = mean_of(aux, i, &PairMetrics::d_v);
        e.aux_D_H_T = mean_of(aux, i, &PairMetrics::d_h);
        e.aux_D_V_trunc = mean_of(aux, i, &PairMetrics::d_v_trunc);
        out.entries.push_back(e);
    }
    out.D_V_monotone = non_increasing(out.entries, &DiagnosticEntry::D_V);
    out.D_H_T_monotone = non_increasing(out.entries, &DiagnosticEntry::D_H_T);
    out.aux_D_V_monotone = non_increasing(out.entries, &DiagnosticEntry::aux_D_V);
    out.aux_D_H_T_monotone = non_increasing(out.entries, &DiagnosticEntry::aux_D_H_T);
    return out;
}

// ---------------------------------------------------------------------------
// Output

void write_iterates_csv(std::ostream& os, const OptimizationRecord& record,
                        const ConvergenceDiagnostics* diagnostics) {
    os << "iterate,cost,std_error,best_so_far,D_V,D_H_T\r\n";
    for (const auto& it : record.iterates) {
        os << it.index << ',' << format_double(it.estimate.mean) << ','
           << format_double(it.estimate.std_error) << ',' << format_double(it.best_so_far) << ',';
        const DiagnosticEntry* e = nullptr;
        if (diagnostics != nullptr) {
            for (const auto& x : diagnostics->entries) {
                if (x.iterate == it.index) e = &x;
            }
        }
        if (e != nullptr) os << format_double(e->D_V) << ',' << format_double(e->D_H_T);
        else os << ',';
        os << "\r\n";
    }
}

void write_diagnostics_csv(std::ostream& os, const ConvergenceDiagnostics& d) {
    os << "iterate,D_V,D_H_T,aux_D_V,aux_D_H_T";
    if (d.truncation_M) os << ",D_V_trunc,aux_D_V_trunc";
    os << "\r\n";
    for (const auto& e : d.entries) {
        os << e.iterate << ',' << format_double(e.D_V) << ',' << format_double(e.D_H_T) << ','
           << format_double(e.aux_D_V) << ',' << format_double(e.aux_D_H_T);
        if (d.truncation_M) {
            os << ',' << format_double(e.D_V_trunc) << ',' << format_double(e.aux_D_V_trunc);
        }
        os << "\r\n";
    }
}

void write_grid_csv(std::ostream& os, const std::vector<GridPoint>& points) {
    os << "value,cost,std_error\r\n";
    for (const auto& p : points) {
        os << format_double(p.value) << ',' << format_double(p.estimate.mean) << ','
           << format_double(p.estimate.std_error) << "\r\n";
    }
}

namespace {

nlohmann::json estimate_json(const CostEstimate& e) {
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    return {{"mean", num(e.mean)},
            {"std_error", num(e.std_error)},
            {"n_paths", e.n_paths},
            {"crn_tag", e.crn_tag}};
}

CostEstimate parse_estimate(const nlohmann::json& j) {
    auto num = [](const nlohmann::json& x) { return x.is_null() ? kInf : x.get<double>(); };
    CostEstimate e;
    e.mean = num(j.at("mean"));
    e.std_error = num(j.at("std_error"));
    e.n_paths = j.at("n_paths").get<std::size_t>();
    e.crn_tag = j.at("crn_tag").get<std::string>();
    return e;
}

}  // namespace

std::string record_json(const OptimizationRecord& r, const std::string& model_hash) {
    using nlohmann::json;
    json iters = json::array();
    for (const auto& it : r.iterates) {
        iters.push_back({{"index", it.index},
                         {"params", it.params},
                         {"estimate", estimate_json(it.estimate)},
                         {"best_so_far", std::isfinite(it.best_so_far) ? json(it.best_so_far) : json(nullptr)},
                         {"improving", it.improving}});
    }
    json out = {
        {"model_hash", model_hash},
        {"seed", r.seed},
        {"search", {{"max_evals", r.search.max_evals},
                    {"init_scale", r.search.init_scale},
                    {"crn_paths", r.search.crn_paths},
                    {"free_indices", r.search.free_indices},
                    {"restart_diameter", r.search.restart_diameter},
                    {"max_restarts", r.search.max_restarts}}},
        {"iterates", iters},
        {"final_params", r.final_control.flat()},
        {"final_estimate", estimate_json(r.final_estimate)},
        {"fresh_estimate", estimate_json(r.fresh_estimate)},
    };
    return out.dump(2);
}

OptimizationRecord parse_record_json(const std::string& text, const ControlShape& shape,
                                     const AdmissibleBounds& bounds, std::string* model_hash) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text);
        if (model_hash != nullptr) *model_hash = j.at("model_hash").get<std::string>();
        std::vector<Iterate> iters;
        for (const auto& x : j.at("iterates")) {
            Iterate it;
            it.index = x.at("index").get<std::size_t>();
            it.params = x.at("params").get<std::vector<double>>();
            it.estimate = parse_estimate(x.at("estimate"));
            it.best_so_far = x.at("best_so_far").is_null() ? kInf : x.at("best_so_far").get<double>();
            it.improving = x.at("improving").get<bool>();
            iters.push_back(std::move(it));
        }
        SearchConfig s;
        const auto& sj = j.at("search");
        s.max_evals = sj.at("max_evals").get<std::size_t>();
        s.init_scale = sj.at("init_scale").get<double>();
        s.crn_paths = sj.at("crn_paths").get<std::size_t>();
        s.free_indices = sj.at("free_indices").get<std::vector<std::size_t>>();
        s.restart_diameter = sj.at("restart_diameter").get<double>();
        s.max_restarts = sj.at("max_restarts").get<std::size_t>();
        return OptimizationRecord{std::move(iters),
                                  FeedbackControl(shape, bounds,
                                                  j.at("final_params").get<std::vector<double>>()),
                                  parse_estimate(j.at("final_estimate")),
                                  parse_estimate(j.at("fresh_estimate")),
                                  j.at("seed").get<std::uint64_t>(),
                                  s};
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed optimization record: ") + e.what(), "--record");
    }
}

}  // namespace locmono
