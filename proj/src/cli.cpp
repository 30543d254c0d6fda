#include "locmono/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "locmono/conditions.hpp"
#include "locmono/config.hpp"
#include "locmono/errors.hpp"
#include "locmono/optimizer.hpp"
#include "locmono/parallel.hpp"
#include "locmono/solver.hpp"

namespace locmono {

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
    std::string config_path;
    std::string model;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<std::size_t> steps;
    std::string out_dir = ".";
    unsigned threads = default_threads();
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "configuration file");
    cmd->add_option("--model", f.model, "model kind: linear, rd, nonlocal, semilinear");
    cmd->add_option("--seed", f.seed, "master seed (default: $LOCMONO_SEED, then run.seed)");
    cmd->add_option("--paths", f.paths, "Monte Carlo paths");
    cmd->add_option("--steps", f.steps, "time steps");
    cmd->add_option("--out", f.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--set", f.sets, "extra 'section.key=value' assignments");
}

RunConfig build_config(const CommonFlags& f) {
    RunConfig c = f.config_path.empty() ? RunConfig{} : load_config(f.config_path);
    if (!f.model.empty()) c.set("model.kind", f.model);
    if (const char* env = std::getenv("LOCMONO_SEED"); env != nullptr && *env != '\0') {
        c.set("run.seed", env);
    }
    if (f.seed) c.run.seed = *f.seed;
    if (f.paths) c.run.paths = *f.paths;
    if (f.steps) c.run.n_steps = *f.steps;
    for (const auto& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
        auto trim = [](std::string x) {
            x.erase(0, x.find_first_not_of(' '));
            x.erase(x.find_last_not_of(' ') + 1);
            return x;
        };
        c.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    c.validate();
    return c;
}

fs::path prepare_out(const CommonFlags& f) {
    fs::path dir(f.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw UsageError("cannot create output directory '" + f.out_dir + "'");
    return dir;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw UsageError("cannot write '" + p.string() + "'");
    os << content;
}

// Timestamps and thread counts live here, never in primary outputs.
void write_meta(const fs::path& dir, const std::string& command, const CommonFlags& f,
                const RunConfig& c) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    nlohmann::json meta = {{"command", command},
                           {"timestamp", stamp},
                           {"threads", f.threads},
                           {"model_hash", c.model_hash()},
                           {"config", c.canonical()}};
    write_file(dir / "meta.json", meta.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

struct CheckFlags {
    std::vector<std::string> conditions;
    std::optional<std::size_t> samples;
    std::optional<double> tol;
};

int cmd_check(const CommonFlags& f, const CheckFlags& cf, std::ostream& out) {
    RunConfig c = build_config(f);
    if (!cf.conditions.empty()) c.audit.conditions = cf.conditions;
    if (cf.samples) c.audit.samples = *cf.samples;
    if (cf.tol) c.audit.tolerance = *cf.tol;
    c.validate();
    const Grid g = c.grid();
    const DriftOperator drift = c.drift();
    const NoiseOperator noise = c.noise();
    const FeedbackControl control = c.control_value();
    const ConditionConstants k = c.constants(g);

    // The default list carries C5; drop it quietly where no dual growth bound exists.
    // An explicit request still fails in audit().
    const bool default_list = c.audit.conditions == AuditConfig{}.conditions;
    std::vector<ConditionId> ids;
    for (const auto& s : c.audit.conditions) {
        const ConditionId id = parse_condition_id(s);
        if (id == ConditionId::C5 && default_list && !k.dual_growth) {
            out << "C5 skipped (not applicable to this operator)\n";
            continue;
        }
        ids.push_back(id);
    }
    const StateSampler sampler(c.sampler(), g);
    const AuditModel model{drift, noise, control, g};

    const fs::path dir = prepare_out(f);
    nlohmann::json reports = nlohmann::json::array();
    bool all_passed = true;
    for (ConditionId id : ids) {
        const AuditReport r = audit(id, model, sampler, k, f.threads);
        const bool ok = r.passed(c.audit.tolerance);
        all_passed = all_passed && ok;
        reports.push_back(nlohmann::json::parse(report_json(r, c.audit.tolerance)));
        out << to_string(id) << ' ' << (ok ? "pass" : "REFUTED") << " worst_margin="
            << format_double(r.worst_margin) << " witness=" << r.witness.index << '\n';
    }
    nlohmann::json doc = {{"model_hash", c.model_hash()},
                          {"kind", std::string(to_string(c.model.kind))},
                          {"seed", c.run.seed},
                          {"all_passed", all_passed},
                          {"reports", reports}};
    write_file(dir / "audit_report.json", doc.dump(2) + "\n");
    write_meta(dir, "check", f, c);
    return all_passed ? exit_code::success : exit_code::refuted;
}

struct SimulateFlags {
    std::string u0;
    std::string control = "config";
    bool states = false;
};

int cmd_simulate(const CommonFlags& f, const SimulateFlags& sf, std::ostream& out) {
    RunConfig c = build_config(f);
    if (!sf.u0.empty()) {
        c.set("model.u0", sf.u0);
        c.validate();
    }
    if (sf.control != "config" && sf.control != "zero") {
        throw UsageError("--control expects 'config' or 'zero'");
    }
    const Grid g = c.grid();
    const ModelBundle model = c.bundle(g);
    const TimeGrid tg = c.time_grid();
    const FeedbackControl control = sf.control == "zero"
                                        ? FeedbackControl::zero(c.control_shape(), c.bounds())
                                        : c.control_value();
    const CrnSet crn = CrnSet::make(c.run.seed, c.run.paths, tg, model.noise.m_modes());
    const auto trajs = simulate_paths(model, control, tg, crn, g, f.threads);
    const EnergyReport e = energy_statistics(trajs, g, tg);

    const fs::path dir = prepare_out(f);
    {
        std::ostringstream os;
        write_norms_csv(os, trajs, tg);
        write_file(dir / "trajectories.csv", os.str());
    }
    if (sf.states) {
        std::ostringstream os;
        write_states_csv(os, trajs, tg);
        write_file(dir / "states.csv", os.str());
    }
    std::vector<double> final_h;
    for (const auto& t : trajs) final_h.push_back(t.h_norms.back());
    double mean_final = 0.0;
    for (double x : final_h) mean_final += x;
    mean_final /= static_cast<double>(final_h.size());
    nlohmann::json summary = {
        {"model_hash", c.model_hash()},
        {"n_paths", e.n_paths},
        {"E_sup_h2", e.e_sup_h2},
        {"E_int_v2", e.e_int_v2},
        {"E_sup_h4", e.e_sup_h4},
        {"E_int_h2_squared", e.e_int_h2_sq},
        {"E_u0_h2", e.e_u0_h2},
        {"c_hat", e.c_hat ? nlohmann::json(*e.c_hat) : nlohmann::json(nullptr)},
        {"c_hat_std_error", e.c_hat_se},
        {"mean_final_h_norm", mean_final},
        {"T", tg.T},
        {"n_steps", tg.n_steps},
    };
    write_file(dir / "energy_summary.json", summary.dump(2) + "\n");
    write_meta(dir, "simulate", f, c);
    out << "simulated " << trajs.size() << " paths; E sup|u|^2 = " << format_double(e.e_sup_h2)
        << '\n';
    return exit_code::success;
}

struct OptimizeFlags {
    std::string grid_search;
    std::optional<std::size_t> max_evals;
};

int cmd_optimize(const CommonFlags& f, const OptimizeFlags& of, std::ostream& out) {
    RunConfig c = build_config(f);
    if (of.max_evals) c.run.max_evals = *of.max_evals;
    c.validate();
    const Grid g = c.grid();
    const ModelBundle model = c.bundle(g);
    const TimeGrid tg = c.time_grid();
    const CostSpec spec = c.cost_spec(g);
    const std::vector<double> start = c.control_value().flat();

    const OptimizationRecord rec = minimize(spec, model, tg, g, c.control_shape(), c.bounds(),
                                            c.search(f.threads), c.run.seed, start);
    const fs::path dir = prepare_out(f);
    write_file(dir / "optimization_record.json", record_json(rec, c.model_hash()) + "\n");
    {
        std::ostringstream os;
        write_iterates_csv(os, rec);
        write_file(dir / "iterates.csv", os.str());
    }
    if (!of.grid_search.empty()) {
        const auto colon = of.grid_search.find(':');
        const std::string name = of.grid_search.substr(0, colon);
        if (name.rfind("gamma", 0) != 0 || colon == std::string::npos) {
            throw UsageError("--grid-search expects gammaK:points, e.g. gamma1:201");
        }
        std::size_t k = 0, points = 0;
        try {
            k = std::stoul(name.substr(5));
            points = std::stoul(of.grid_search.substr(colon + 1));
        } catch (const std::exception&) {
            throw UsageError("--grid-search expects gammaK:points, e.g. gamma1:201");
        }
        if (k == 0) throw UsageError("gain indices start at gamma1");
        const CrnSet crn = CrnSet::make(c.run.seed, c.run.paths, tg, model.noise.m_modes());
        const auto pts = grid_search(spec, model, tg, g, c.control_shape(), c.bounds(), crn, k - 1,
                                     points, start, f.threads);
        std::ostringstream os;
        write_grid_csv(os, pts);
        write_file(dir / "grid_search.csv", os.str());
    }
    write_meta(dir, "optimize", f, c);
    out << "evaluations " << rec.iterates.size() << "; best "
        << format_double(rec.iterates.back().best_so_far) << "; fresh "
        << format_double(rec.fresh_estimate.mean) << " +- "
        << format_double(rec.fresh_estimate.std_error) << '\n';
    return exit_code::success;
}

struct DiagnoseFlags {
    std::string record;
    std::optional<double> M;
    std::optional<std::size_t> tail;
};

int cmd_diagnose(const CommonFlags& f, const DiagnoseFlags& df, std::ostream& out) {
    const RunConfig c = build_config(f);
    std::ifstream in(df.record, std::ios::binary);
    if (!in) throw UsageError("cannot read record '" + df.record + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string hash;
    const OptimizationRecord rec =
        parse_record_json(ss.str(), c.control_shape(), c.bounds(), &hash);
    if (hash != c.model_hash()) {
        throw ConfigError("record was produced by a different model (hash " + hash + ", config " +
                              c.model_hash() + ")",
                          "--record");
    }
    const Grid g = c.grid();
    const ModelBundle model = c.bundle(g);
    const TimeGrid tg = c.time_grid();
    const CrnSet crn = CrnSet::make(rec.seed, rec.search.crn_paths, tg, model.noise.m_modes());
    const std::size_t tail = df.tail.value_or(c.run.tail_k);
    const ConvergenceDiagnostics d =
        diagnose_convergence(rec, tail, model, tg, crn, g, df.M, f.threads, 1);

    const fs::path dir = prepare_out(f);
    {
        std::ostringstream os;
        write_diagnostics_csv(os, d);
        write_file(dir / "diagnostics.csv", os.str());
    }
    if (df.M) {
        std::ostringstream os;
        os << "path_id,truncation_step\r\n";
        for (std::size_t p = 0; p < d.truncation_index.size(); ++p) {
            os << p << ',' << d.truncation_index[p] << "\r\n";
        }
        write_file(dir / "truncation.csv", os.str());
    }
    write_meta(dir, "diagnose", f, c);
    out << "diagnosed " << d.entries.size() << " iterates; monotone D_V="
        << (d.D_V_monotone ? "yes" : "no") << " D_H_T=" << (d.D_H_T_monotone ? "yes" : "no")
        << '\n';
    return exit_code::success;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Controlled SPDE toolkit: audits, simulation and optimal-control search",
                 "locmono"};
    app.require_subcommand(1);

    CommonFlags common;
    CheckFlags check_flags;
    SimulateFlags sim_flags;
    OptimizeFlags opt_flags;
    DiagnoseFlags diag_flags;

    auto* check = app.add_subcommand("check", "audit the structural conditions");
    add_common(check, common);
    check->add_option("--conditions", check_flags.conditions, "condition ids")->delimiter(',');
    check->add_option("--samples", check_flags.samples, "samples per condition");
    check->add_option("--tol", check_flags.tol, "pass tolerance on the worst margin");

    auto* simulate_cmd = app.add_subcommand("simulate", "simulate paths and energy statistics");
    add_common(simulate_cmd, common);
    simulate_cmd->add_option("--u0", sim_flags.u0, "initial state: zero, sine, first_mode");
    simulate_cmd->add_option("--control", sim_flags.control, "config or zero");
    simulate_cmd->add_flag("--states", sim_flags.states, "also write full states");

    auto* optimize_cmd = app.add_subcommand("optimize", "search for an optimal control");
    add_common(optimize_cmd, common);
    optimize_cmd->add_option("--grid-search", opt_flags.grid_search, "gammaK:points brute-force scan");
    optimize_cmd->add_option("--max-evals", opt_flags.max_evals, "cost evaluations");

    auto* diagnose_cmd = app.add_subcommand("diagnose", "convergence diagnostics for a record");
    add_common(diagnose_cmd, common);
    diagnose_cmd->add_option("--record", diag_flags.record, "optimization_record.json")->required();
    diagnose_cmd->add_option("--M", diag_flags.M, "truncation level");
    diagnose_cmd->add_option("--tail", diag_flags.tail, "improving iterates to diagnose");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_code::success;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_code::success;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::usage;
    }

    try {
        if (check->parsed()) return cmd_check(common, check_flags, out);
        if (simulate_cmd->parsed()) return cmd_simulate(common, sim_flags, out);
        if (optimize_cmd->parsed()) return cmd_optimize(common, opt_flags, out);
        if (diagnose_cmd->parsed()) return cmd_diagnose(common, diag_flags, out);
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << " (path " << e.path_index() << ", step " << e.step()
            << ")\n";
        return exit_code::numerical;
    } catch (const OptimizationError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::numerical;
    } catch (const NumericDomainError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::numerical;
    } catch (const InternalError& e) {
        err << "internal error: " << e.what() << '\n';
        return exit_code::numerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::usage;
    }
    err << "error: no subcommand\n";
    return exit_code::usage;
}

}  // namespace locmono
