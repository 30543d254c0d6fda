#include "locmono/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "locmono/errors.hpp"

namespace locmono {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double to_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + v + "'", key);
    }
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        if (v.empty() || v.front() == '-') throw std::invalid_argument(v);
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("expected a non-negative integer, got '" + v + "'", key);
    }
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    if (trim(v).empty()) return out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    return out;
}

std::vector<double> to_doubles(const std::string& v, const std::string& key) {
    std::vector<double> out;
    for (const auto& s : split_list(v)) out.push_back(to_double(s, key));
    return out;
}

std::vector<std::size_t> to_sizes(const std::string& v, const std::string& key) {
    std::vector<std::size_t> out;
    for (const auto& s : split_list(v)) out.push_back(to_u64(s, key));
    return out;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F&& f) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0) out += ",";
        out += f(xs[i]);
    }
    return out;
}

std::string doubles(const std::vector<double>& xs) { return join(xs, fmt); }
std::string sizes(const std::vector<std::size_t>& xs) {
    return join(xs, [](std::size_t x) { return std::to_string(x); });
}

struct Field {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define LM_DOUBLE(path, member)                                                                \
    {                                                                                          \
        path, Field {                                                                          \
            [](RunConfig& c, const std::string& v, const std::string& k) { c.member = to_double(v, k); }, \
                [](const RunConfig& c) { return fmt(c.member); }                               \
        }                                                                                      \
    }
#define LM_SIZE(path, member)                                                                  \
    {                                                                                          \
        path, Field {                                                                          \
            [](RunConfig& c, const std::string& v, const std::string& k) {                     \
                c.member = static_cast<decltype(c.member)>(to_u64(v, k));                      \
            },                                                                                 \
                [](const RunConfig& c) { return std::to_string(c.member); }                    \
        }                                                                                      \
    }
#define LM_DOUBLES(path, member)                                                               \
    {                                                                                          \
        path, Field {                                                                          \
            [](RunConfig& c, const std::string& v, const std::string& k) { c.member = to_doubles(v, k); }, \
                [](const RunConfig& c) { return doubles(c.member); }                           \
        }                                                                                      \
    }
#define LM_STRING(path, member)                                                                \
    {                                                                                          \
        path, Field {                                                                          \
            [](RunConfig& c, const std::string& v, const std::string&) { c.member = v; },      \
                [](const RunConfig& c) { return c.member; }                                    \
        }                                                                                      \
    }

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = {
        {"model.kind",
         Field{[](RunConfig& c, const std::string& v, const std::string& k) {
                   try {
                       c.model.kind = parse_drift_kind(v);
                   } catch (const ParameterError& e) {
                       throw ConfigError(e.what(), k);
                   }
               },
               [](const RunConfig& c) { return std::string(to_string(c.model.kind)); }}},
        LM_SIZE("model.n", model.n),
        LM_DOUBLE("model.nu", model.nu),
        LM_DOUBLE("model.q", model.q),
        LM_DOUBLE("model.p", model.p),
        LM_DOUBLE("model.P", model.P),
        LM_STRING("model.coefficient", model.coefficient),
        LM_DOUBLES("model.table_knots", model.table_knots),
        LM_DOUBLES("model.table_values", model.table_values),
        LM_DOUBLE("model.J", model.J),
        LM_SIZE("model.noise_modes", model.noise_modes),
        LM_DOUBLE("model.noise_amplitude", model.noise_amplitude),
        LM_DOUBLE("model.noise_decay", model.noise_decay),
        LM_DOUBLE("model.ramp_time", model.ramp_time),
        LM_STRING("model.u0", model.u0.preset),
        LM_DOUBLES("model.u0_modes", model.u0.modes),
        LM_DOUBLE("control.eta", control.eta),
        LM_DOUBLE("control.lambda", control.lambda),
        LM_DOUBLE("control.alpha", control.alpha),
        LM_SIZE("control.m_c", control.m_c),
        LM_SIZE("control.knots", control.knots),
        LM_DOUBLES("control.params", control.params),
        {"control.free",
         Field{[](RunConfig& c, const std::string& v, const std::string& k) {
                   c.control.free = to_sizes(v, k);
               },
               [](const RunConfig& c) { return sizes(c.control.free); }}},
        LM_DOUBLE("cost.running_weight", cost.running_weight),
        LM_DOUBLE("cost.control_weight", cost.control_weight),
        LM_DOUBLE("cost.terminal_weight", cost.terminal_weight),
        LM_STRING("cost.u_ref", cost.u_ref.preset),
        LM_DOUBLES("cost.u_ref_modes", cost.u_ref.modes),
        LM_STRING("cost.u_T", cost.u_T.preset),
        LM_DOUBLES("cost.u_T_modes", cost.u_T.modes),
        LM_DOUBLE("run.T", run.T),
        LM_SIZE("run.n_steps", run.n_steps),
        LM_SIZE("run.paths", run.paths),
        LM_SIZE("run.seed", run.seed),
        LM_SIZE("run.max_evals", run.max_evals),
        LM_DOUBLE("run.init_scale", run.init_scale),
        LM_SIZE("run.max_restarts", run.max_restarts),
        LM_SIZE("run.tail_k", run.tail_k),
        LM_SIZE("audit.samples", audit.samples),
        LM_DOUBLE("audit.radius", audit.radius),
        LM_DOUBLE("audit.tolerance", audit.tolerance),
        LM_DOUBLE("audit.decay_lo", audit.decay_lo),
        LM_DOUBLE("audit.decay_hi", audit.decay_hi),
        LM_SIZE("audit.modes", audit.modes),
        {"audit.conditions",
         Field{[](RunConfig& c, const std::string& v, const std::string&) {
                   c.audit.conditions = split_list(v);
               },
               [](const RunConfig& c) {
                   return join(c.audit.conditions, [](const std::string& s) { return s; });
               }}},
        LM_DOUBLE("audit.rho_scale", audit.rho_scale),
    };
    return table;
}

#undef LM_DOUBLE
#undef LM_SIZE
#undef LM_DOUBLES
#undef LM_STRING

constexpr std::string_view kOverridePrefix = "audit.override.";

const std::vector<std::string>& override_names() {
    static const std::vector<std::string> names = {
        "theta", "K",  "beta", "K1", "J1", "theta1", "c1", "c2", "c3", "c4", "c5",
        "theta2", "p3", "p4", "p5", "rho_coefficient", "rho_exponent", "L"};
    return names;
}

void require(bool ok, const std::string& message, const std::string& key) {
    if (!ok) throw ConfigError(message, key);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }
bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

void validate_state_spec(const StateSpec& s, const std::string& key, std::size_t n) {
    require(s.preset == "zero" || s.preset == "sine" || s.preset == "first_mode" ||
                s.preset == "modes",
            "expected zero, sine, first_mode or modes, got '" + s.preset + "'", key);
    if (s.preset == "modes") {
        require(s.modes.size() <= n, "more mode coefficients than grid nodes", key + "_modes");
        for (double x : s.modes) require(std::isfinite(x), "mode coefficients must be finite", key + "_modes");
    }
}

}  // namespace

// ---------------------------------------------------------------------------

StateVector StateSpec::build(const Grid& g) const {
    if (preset == "zero") return g.zeros();
    if (preset == "sine") {
        return g.sample([](double x) { return std::sin(std::numbers::pi * x); });
    }
    if (preset == "first_mode") return g.mode_vector(1);
    if (preset == "modes") return g.synthesize(modes);
    throw ConfigError("unknown state preset '" + preset + "'");
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key.rfind(kOverridePrefix, 0) == 0) {
        const std::string name = key.substr(kOverridePrefix.size());
        const auto& names = override_names();
        require(std::find(names.begin(), names.end(), name) != names.end(),
                "unknown constant '" + name + "'", key);
        audit.overrides[name] = to_double(value, key);
        return;
    }
    const auto& table = fields();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown configuration key", key);
    it->second.set(*this, value, key);
}

RunConfig RunConfig::parse(std::string_view text) {
    RunConfig c;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'section.key = value'");
        }
        c.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    c.validate();
    return c;
}

std::string RunConfig::canonical() const {
    std::map<std::string, std::string> lines;
    for (const auto& [key, field] : fields()) lines[key] = field.get(*this);
    for (const auto& [name, value] : audit.overrides) {
        lines[std::string(kOverridePrefix) + name] = fmt(value);
    }
    std::string out;
    for (const auto& [key, value] : lines) out += key + " = " + value + "\n";
    return out;
}

void RunConfig::validate() const {
    const auto& m = model;
    require(m.n >= 2, "grid needs at least 2 interior nodes", "model.n");
    require(finite_positive(m.nu), "nu must be > 0", "model.nu");
    require(std::isfinite(m.q) && m.q >= 2.0, "q must satisfy q >= 2", "model.q");
    require(finite_positive(m.p), "p must be > 0", "model.p");
    require(std::isfinite(m.P) && m.P >= m.p, "P must satisfy P >= p", "model.P");
    require(m.coefficient == "rational" || m.coefficient == "table",
            "expected rational or table", "model.coefficient");
    if (m.coefficient == "table") {
        require(m.table_knots.size() >= 2, "table needs at least 2 knots", "model.table_knots");
        require(m.table_values.size() == m.table_knots.size(), "one value per knot",
                "model.table_values");
        for (std::size_t i = 1; i < m.table_knots.size(); ++i) {
            require(m.table_knots[i] > m.table_knots[i - 1], "knots must be increasing",
                    "model.table_knots");
        }
        for (double v : m.table_values) {
            require(std::isfinite(v) && v >= m.p && v <= m.P, "table values must lie in [p, P]",
                    "model.table_values");
        }
    }
    require(std::isfinite(m.J) && m.J >= 0.0 && m.J < 1.0, "J must satisfy 0 <= J < 1", "model.J");
    require(m.noise_modes >= 1 && m.noise_modes <= m.n, "noise modes must be in [1, n]",
            "model.noise_modes");
    require(finite_nonneg(m.noise_amplitude), "noise amplitude must be >= 0", "model.noise_amplitude");
    require(finite_nonneg(m.noise_decay), "noise decay must be >= 0", "model.noise_decay");
    require(finite_positive(m.ramp_time) && m.ramp_time <= run.T, "ramp time must be in (0, T]",
            "model.ramp_time");
    validate_state_spec(m.u0, "model.u0", m.n);

    const auto& c = control;
    require(finite_positive(c.eta), "eta must be > 0", "control.eta");
    require(finite_positive(c.lambda), "lambda must be > 0", "control.lambda");
    require(finite_positive(c.alpha), "alpha must be > 0", "control.alpha");
    require(c.m_c >= 1 && c.m_c <= m.n, "m_c must be in [1, n]", "control.m_c");
    require(c.knots >= 1, "need at least one knot", "control.knots");
    const std::size_t flat = c.m_c + c.knots * c.m_c;
    require(c.params.empty() || c.params.size() == flat,
            "expected " + std::to_string(flat) + " parameters", "control.params");
    for (double x : c.params) require(std::isfinite(x), "parameters must be finite", "control.params");
    for (std::size_t i : c.free) require(i < flat, "free index outside the parameter vector", "control.free");

    require(finite_nonneg(cost.running_weight), "weight must be >= 0", "cost.running_weight");
    require(finite_nonneg(cost.control_weight), "weight must be >= 0", "cost.control_weight");
    require(finite_nonneg(cost.terminal_weight), "weight must be >= 0", "cost.terminal_weight");
    validate_state_spec(cost.u_ref, "cost.u_ref", m.n);
    validate_state_spec(cost.u_T, "cost.u_T", m.n);

    require(finite_positive(run.T), "T must be > 0", "run.T");
    require(run.n_steps >= 1, "n_steps must be >= 1", "run.n_steps");
    require(run.paths >= 1, "paths must be >= 1", "run.paths");
    require(run.max_evals >= 1, "max_evals must be >= 1", "run.max_evals");
    require(finite_positive(run.init_scale), "init_scale must be > 0", "run.init_scale");
    require(run.tail_k >= 2, "tail_k must be >= 2", "run.tail_k");

    require(audit.samples >= 1, "samples must be >= 1", "audit.samples");
    require(finite_positive(audit.radius), "radius must be > 0", "audit.radius");
    require(finite_nonneg(audit.tolerance), "tolerance must be >= 0", "audit.tolerance");
    require(finite_nonneg(audit.decay_lo) && std::isfinite(audit.decay_hi) &&
                audit.decay_hi >= audit.decay_lo,
            "need 0 <= decay_lo <= decay_hi", "audit.decay_lo");
    require(audit.modes <= m.n, "audit modes must be <= n", "audit.modes");
    require(finite_nonneg(audit.rho_scale), "rho_scale must be >= 0", "audit.rho_scale");
    for (const auto& id : audit.conditions) parse_condition_id(id);
    for (const auto& [name, value] : audit.overrides) {
        require(std::isfinite(value), "override must be finite",
                std::string(kOverridePrefix) + name);
    }
}

std::string RunConfig::model_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::istringstream in(canonical());
    std::string line;
    while (std::getline(in, line)) {
        const bool keep = line.rfind("model.", 0) == 0 || line.rfind("control.", 0) == 0 ||
                          line.rfind("cost.", 0) == 0 || line.rfind("run.T ", 0) == 0 ||
                          line.rfind("run.n_steps ", 0) == 0;
        if (!keep || line.rfind("control.free ", 0) == 0) continue;
        for (unsigned char ch : line + "\n") {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Grid RunConfig::grid() const { return Grid(model.n); }

DriftOperator RunConfig::drift() const {
    DriftParams params;
    params.nu = model.nu;
    params.q = model.q;
    params.J = model.J;
    params.coefficient = model.coefficient == "table"
                             ? NonlocalCoefficient::table(model.p, model.P, model.table_knots,
                                                          model.table_values)
                             : NonlocalCoefficient::rational(model.p, model.P);
    return {model.kind, params};
}

NoiseOperator RunConfig::noise() const {
    return NoiseOperator::decaying(model.noise_modes, model.noise_amplitude, model.noise_decay,
                                   model.ramp_time);
}

ModelBundle RunConfig::bundle(const Grid& g) const { return {drift(), noise(), model.u0.build(g)}; }

TimeGrid RunConfig::time_grid() const { return {run.T, run.n_steps}; }

ControlShape RunConfig::control_shape() const { return {control.m_c, control.knots, run.T}; }

AdmissibleBounds RunConfig::bounds() const { return {control.eta, control.lambda, control.alpha}; }

FeedbackControl RunConfig::control_value() const {
    const ControlShape shape = control_shape();
    std::vector<double> raw = control.params;
    if (raw.empty()) raw.assign(shape.flat_size(), 0.0);
    return project_admissible(raw, shape, bounds());
}

CostSpec RunConfig::cost_spec(const Grid& g) const {
    CostSpec s;
    s.running_weight = cost.running_weight;
    s.control_weight = cost.control_weight;
    s.terminal_weight = cost.terminal_weight;
    s.u_ref = {cost.u_ref.build(g)};
    s.u_T = cost.u_T.build(g);
    return s;
}

SamplerConfig RunConfig::sampler() const {
    SamplerConfig s;
    s.samples = audit.samples;
    s.radius = audit.radius;
    s.decay_lo = audit.decay_lo;
    s.decay_hi = audit.decay_hi;
    s.modes = audit.modes;
    s.T = run.T;
    s.seed = run.seed;
    return s;
}

SearchConfig RunConfig::search(unsigned threads) const {
    SearchConfig s;
    s.max_evals = run.max_evals;
    s.init_scale = run.init_scale;
    s.crn_paths = run.paths;
    s.free_indices = control.free;
    s.max_restarts = run.max_restarts;
    s.threads = threads;
    return s;
}

ConditionConstants RunConfig::constants(const Grid& g) const {
    ConditionConstants k = declared_constants(drift(), noise().lipschitz_constant(g), control.alpha);
    if (k.rho) k.rho->coefficient *= audit.rho_scale;
    for (const auto& [name, v] : audit.overrides) {
        if (name == "theta") k.theta = v;
        else if (name == "K") k.K = v;
        else if (name == "beta") k.beta = v;
        else if (name == "K1") k.K1 = v;
        else if (name == "J1") k.J1 = v;
        else if (name == "theta1") k.theta1 = v;
        else if (name == "c1") k.c1 = v;
        else if (name == "c2") k.c2 = v;
        else if (name == "c3") k.c3 = v;
        else if (name == "c4") k.c4 = v;
        else if (name == "c5") k.c5 = v;
        else if (name == "L") k.L = v;
        else if (name == "rho_coefficient" || name == "rho_exponent") {
            if (!k.rho) k.rho = RhoForm{};
            (name == "rho_coefficient" ? k.rho->coefficient : k.rho->exponent) = v;
        } else {
            if (!k.dual_growth) k.dual_growth = DualGrowthConstants{};
            auto& d = *k.dual_growth;
            (name == "theta2" ? d.theta2 : name == "p3" ? d.p3 : name == "p4" ? d.p4 : d.p5) = v;
        }
    }
    return k;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'", "--config");
    std::ostringstream ss;
    ss << in.rdbuf();
    return RunConfig::parse(ss.str());
}

}  // namespace locmono
