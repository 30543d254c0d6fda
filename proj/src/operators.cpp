#include "locmono/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "locmono/errors.hpp"

namespace locmono {

std::string_view to_string(DriftKind kind) noexcept {
    switch (kind) {
        case DriftKind::linear: return "linear";
        case DriftKind::reaction_diffusion: return "reaction_diffusion";
        case DriftKind::nonlocal: return "nonlocal";
        case DriftKind::semilinear: return "semilinear";
    }
    return "unknown";
}

DriftKind parse_drift_kind(std::string_view name) {
    if (name == "linear" || name == "heat") return DriftKind::linear;
    if (name == "reaction_diffusion" || name == "rd") return DriftKind::reaction_diffusion;
    if (name == "nonlocal") return DriftKind::nonlocal;
    if (name == "semilinear") return DriftKind::semilinear;
    throw ParameterError("unknown model kind '" + std::string(name) +
                         "' (expected linear, rd, nonlocal or semilinear)");
}

// ---------------------------------------------------------------------------
// NonlocalCoefficient

NonlocalCoefficient NonlocalCoefficient::rational(double p, double P) {
    if (!(p > 0.0) || !(P >= p) || !std::isfinite(P)) {
        throw ParameterError("nonlocal coefficient needs 0 < p <= P");
    }
    NonlocalCoefficient a(p, P);
    // max |d/ds 1/(1+s²)| = 3√3/8, attained at s = 1/√3
    a.lipschitz_ = (P - p) * 3.0 * std::sqrt(3.0) / 8.0;
    return a;
}

NonlocalCoefficient NonlocalCoefficient::table(double p, double P, std::vector<double> knots,
                                               std::vector<double> values) {
    if (!(p > 0.0) || !(P >= p) || !std::isfinite(P)) {
        throw ParameterError("nonlocal coefficient needs 0 < p <= P");
    }
    if (knots.size() < 2 || knots.size() != values.size()) {
        throw ParameterError("coefficient table needs >= 2 knots and one value per knot");
    }
    NonlocalCoefficient a(p, P);
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (!std::isfinite(knots[i]) || !std::isfinite(values[i])) {
            throw ParameterError("coefficient table entries must be finite");
        }
        if (values[i] < p || values[i] > P) {
            throw ParameterError("coefficient table value " + std::to_string(values[i]) +
                                 " outside [p, P]");
        }
        if (i > 0) {
            if (!(knots[i] > knots[i - 1])) {
                throw ParameterError("coefficient table knots must be strictly increasing");
            }
            a.lipschitz_ = std::max(a.lipschitz_, std::abs(values[i] - values[i - 1]) /
                                                      (knots[i] - knots[i - 1]));
        }
    }
    a.knots_ = std::move(knots);
    a.values_ = std::move(values);
    return a;
}

double NonlocalCoefficient::operator()(double s) const {
    if (knots_.empty()) return p_ + (P_ - p_) / (1.0 + s * s);
    if (s <= knots_.front()) return values_.front();
    if (s >= knots_.back()) return values_.back();
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
    const auto i = static_cast<std::size_t>(it - knots_.begin());
    const double w = (s - knots_[i - 1]) / (knots_[i] - knots_[i - 1]);
    return values_[i - 1] + w * (values_[i] - values_[i - 1]);
}

// ---------------------------------------------------------------------------
// DriftOperator

DriftOperator::DriftOperator(DriftKind kind, DriftParams params)
    : kind_(kind), params_(std::move(params)) {
    switch (kind_) {
        case DriftKind::linear:
            if (!(params_.nu > 0.0) || !std::isfinite(params_.nu)) {
                throw ParameterError("linear kind needs nu > 0");
            }
            break;
        case DriftKind::reaction_diffusion:
            if (!(params_.q >= 2.0) || !std::isfinite(params_.q)) {
                throw ParameterError("reaction exponent q must satisfy q >= 2");
            }
            break;
        case DriftKind::nonlocal:
            break;
        case DriftKind::semilinear:
            if (!(params_.J >= 0.0) || !(params_.J < 1.0)) {
                throw ParameterError("semilinear bound J must satisfy 0 <= J < 1");
            }
            break;
    }
}

DriftOperator DriftOperator::linear(double nu) {
    DriftParams p;
    p.nu = nu;
    return {DriftKind::linear, p};
}

DriftOperator DriftOperator::reaction_diffusion(double q) {
    DriftParams p;
    p.q = q;
    return {DriftKind::reaction_diffusion, p};
}

DriftOperator DriftOperator::nonlocal(NonlocalCoefficient a) {
    DriftParams p;
    p.coefficient = std::move(a);
    return {DriftKind::nonlocal, p};
}

DriftOperator DriftOperator::semilinear(double J) {
    DriftParams p;
    p.J = J;
    return {DriftKind::semilinear, p};
}

double DriftOperator::transport(double x) const { return params_.J * std::tanh(x); }

void DriftOperator::check_inputs(const StateVector& w, const StateVector& v, const Grid& g) const {
    g.check(w);
    g.check(v);
    if (!w.all_finite() || !v.all_finite()) {
        throw NumericDomainError("drift evaluated at a non-finite state");
    }
}

double DriftOperator::diffusion(const StateVector& w, const Grid& g) const {
    switch (kind_) {
        case DriftKind::linear: return params_.nu;
        case DriftKind::nonlocal: {
            const double a = params_.coefficient(integral(w, g));
            if (a < params_.coefficient.lower() || a > params_.coefficient.upper()) {
                throw ParameterError("nonlocal coefficient left [p, P]");
            }
            return a;
        }
        case DriftKind::reaction_diffusion:
        case DriftKind::semilinear: return 1.0;
    }
    return 1.0;
}

StateVector DriftOperator::remainder(const StateVector& w, const StateVector& v,
                                     const Grid& g) const {
    const std::size_t n = v.size();
    StateVector out(n);
    switch (kind_) {
        case DriftKind::linear:
        case DriftKind::nonlocal: break;
        case DriftKind::reaction_diffusion: {
            const double power = params_.q - 2.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double x = v[i];
                if (power == 0.0) {
                    out[i] = -x;
                } else if (x != 0.0) {
                    out[i] = -x * std::exp(power * std::log(std::abs(x)));
                }
            }
            break;
        }
        case DriftKind::semilinear: {
            // f(w)·∂_x v with the central difference and zero boundary ghosts
            const double inv_2h = 0.5 / g.h();
            for (std::size_t i = 0; i < n; ++i) {
                const double left = i > 0 ? v[i - 1] : 0.0;
                const double right = i + 1 < n ? v[i + 1] : 0.0;
                out[i] = transport(w[i]) * (right - left) * inv_2h;
            }
            break;
        }
    }
    return out;
}

StateVector DriftOperator::apply(double /*t*/, const StateVector& w, const StateVector& v,
                                 const Grid& g) const {
    check_inputs(w, v, g);
    StateVector out = g.laplacian(v);
    out *= diffusion(w, g);
    if (kind_ == DriftKind::reaction_diffusion || kind_ == DriftKind::semilinear) {
        out += remainder(w, v, g);
    }
    return out;
}

double DriftOperator::pairing(double /*t*/, const StateVector& w, const StateVector& v,
                              const StateVector& z, const Grid& g) const {
    check_inputs(w, v, g);
    g.check(z);
    double value = diffusion(w, g) * laplacian_pairing(v, z, g);
    if (kind_ == DriftKind::reaction_diffusion || kind_ == DriftKind::semilinear) {
        value += h_inner(remainder(w, v, g), z, g);
    }
    return value;
}

// ---------------------------------------------------------------------------
// NoiseOperator

NoiseOperator::NoiseOperator(std::vector<double> sigma, double ramp_time)
    : sigma_(std::move(sigma)), ramp_time_(ramp_time) {
    if (sigma_.empty()) throw ParameterError("noise needs at least one mode");
    for (double s : sigma_) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw ParameterError("noise amplitudes must be finite and >= 0");
        }
    }
    if (!(ramp_time_ > 0.0) || !std::isfinite(ramp_time_)) {
        throw ParameterError("noise ramp time must be > 0");
    }
}

NoiseOperator NoiseOperator::decaying(std::size_t m_modes, double amplitude, double decay,
                                      double ramp_time) {
    std::vector<double> sigma(m_modes);
    for (std::size_t j = 0; j < m_modes; ++j) {
        sigma[j] = amplitude * std::pow(static_cast<double>(j + 1), -decay);
    }
    return {std::move(sigma), ramp_time};
}

double NoiseOperator::ramp(double t) const noexcept {
    return std::clamp(t / ramp_time_, 0.0, 1.0);
}

bool NoiseOperator::is_off() const noexcept {
    return std::all_of(sigma_.begin(), sigma_.end(), [](double s) { return s == 0.0; });
}

void NoiseOperator::check_grid(const Grid& g) const {
    if (sigma_.size() > g.n_interior()) {
        throw ConformanceError("noise has more modes than the grid");
    }
}

std::vector<StateVector> NoiseOperator::apply(double t, const StateVector& u, const Grid& g) const {
    check_grid(g);
    g.check(u);
    const double r = ramp(t);
    std::vector<StateVector> modes;
    modes.reserve(sigma_.size());
    for (std::size_t j = 0; j < sigma_.size(); ++j) {
        auto e = g.mode(j + 1);
        StateVector m(u.size());
        const double amp = sigma_[j] * r;
        for (std::size_t i = 0; i < u.size(); ++i) m[i] = amp * u[i] * e[i];
        modes.push_back(std::move(m));
    }
    return modes;
}

double NoiseOperator::hs_norm_sq(double t, const StateVector& u, const Grid& g) const {
    double s = 0.0;
    for (const auto& m : apply(t, u, g)) s += h_inner(m, m, g);
    return s;
}

double NoiseOperator::hs_distance_sq(double t, const StateVector& u1, const StateVector& u2,
                                     const Grid& g) const {
    const auto a = apply(t, u1, g);
    const auto b = apply(t, u2, g);
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const StateVector d = a[j] - b[j];
        s += h_inner(d, d, g);
    }
    return s;
}

double NoiseOperator::lipschitz_constant(const Grid& g) const {
    check_grid(g);
    double L = 0.0;
    for (std::size_t j = 0; j < sigma_.size(); ++j) {
        L += sigma_[j] * sigma_[j] * g.mode_sup_sq(j + 1);
    }
    return L;
}

StateVector NoiseOperator::increment(double t, const StateVector& u, std::span<const double> dW,
                                     const Grid& g) const {
    check_grid(g);
    g.check(u);
    if (dW.size() != sigma_.size()) {
        throw ConformanceError("Wiener increment has " + std::to_string(dW.size()) +
                               " modes, noise has " + std::to_string(sigma_.size()));
    }
    const std::size_t n = u.size();
    StateVector field(n);
    const double r = ramp(t);
    if (r == 0.0) return field;
    for (std::size_t j = 0; j < sigma_.size(); ++j) {
        const double amp = sigma_[j] * r * dW[j];
        if (amp == 0.0) continue;
        auto e = g.mode(j + 1);
        for (std::size_t i = 0; i < n; ++i) field[i] += amp * e[i];
    }
    for (std::size_t i = 0; i < n; ++i) field[i] *= u[i];
    return field;
}

// ---------------------------------------------------------------------------
// Constants

double RhoForm::operator()(const StateVector& v, const Grid& g) const {
    if (coefficient == 0.0) return 0.0;
    return coefficient * std::pow(v_norm(v, g), exponent);
}

ConditionConstants declared_constants(const DriftOperator& drift, double noise_L, double alpha) {
    constexpr double c = kEmbeddingBound;
    const double L = noise_L;
    const double ctrl = std::sqrt(2.0 * alpha);  // 2⟨Φ(x)-Φ(y), x-y⟩ ≤ √(2α)‖x-y‖²
    // coercivity bookkeeping shared by every kind: 2⟨g,v⟩ ≤ ‖g‖² + ‖v‖² with ‖g‖² absorbed by f ≡ 1
    const double k_coercive = 1.0 + ctrl + L;

    ConditionConstants k;
    k.L = L;
    k.alpha = alpha;
    k.beta = 2.0;
    k.rho = RhoForm{0.0, 2.0};
    const auto& p = drift.params();

    switch (drift.kind()) {
        case DriftKind::linear: {
            const double alpha1 = p.nu, beta1 = p.nu, gamma1 = 0.0;
            const double theta1 = beta1;
            k.theta = beta1;
            k.K = std::max({2.0 * gamma1 + 2.0 * L / theta1 + alpha, k_coercive + gamma1,
                            alpha1 * alpha1 + alpha * c * c});
            k.K1 = beta1;
            k.J1 = 0.0;
            k.theta1 = theta1;
            k.c1 = k.c2 = k.c3 = 0.0;
            k.c5 = beta1;
            k.c4 = gamma1;
            // squared dual norm: α1² is needed once α1 > 1
            k.dual_growth = DualGrowthConstants{std::max(alpha1, alpha1 * alpha1), 0.0, 0.0, 0.0};
            break;
        }
        case DriftKind::reaction_diffusion: {
            k.theta = 1.0;
            k.beta = p.q;
            k.K = std::max({L, k_coercive, 2.0 + alpha * c * c});
            k.K1 = 1.0;
            k.J1 = 0.0;
            k.theta1 = 1.0;
            k.c5 = 1.0;
            k.c1 = k.c3 = 0.0;
            k.c2 = k.c4 = 1.0;
            if (p.q <= 3.0) {
                k.dual_growth = DualGrowthConstants{2.0 + 2.0 * c * c, 0.0, 2.0 * std::pow(c, 1.5), 0.0};
            }
            break;
        }
        case DriftKind::nonlocal: {
            const double lo = p.coefficient.lower(), hi = p.coefficient.upper();
            const double L1 = p.coefficient.lipschitz();
            k.theta = lo;
            k.K = std::max({L + 2.0 * alpha / lo, k_coercive, hi * hi + alpha * c * c});
            k.rho = RhoForm{L1 / lo, 2.0};  // C(D) = |D| = 1
            k.K1 = lo;
            k.J1 = 0.0;
            k.theta1 = lo;
            k.c1 = 4.0 * L1;
            k.c2 = 2.0 * hi / lo;
            k.c3 = 4.0 * L1;
            k.c5 = 0.75 * lo;
            k.c4 = 0.0;
            k.dual_growth = DualGrowthConstants{std::max(hi, hi * hi), 0.0, 0.0, 0.0};
            break;
        }
        case DriftKind::semilinear: {
            const double J = p.J, L1 = p.J;
            // Young-inequality constant of the one-dimensional local monotonicity bound
            const double K2 =
                std::max(0.75 * std::cbrt(0.5) * std::pow(2.0 * L1, 4.0 / 3.0), 1e-6);
            const double transport_dual = 1.0 + J * std::sqrt(c);
            k.theta = 1.0;
            k.K = std::max({K2 + ctrl + L + 2.0 * J * J, k_coercive + J * J,
                            transport_dual * transport_dual + alpha * c * c});
            k.rho = RhoForm{K2, 2.0};
            k.K1 = 1.0 - J;
            k.J1 = 0.0;
            k.theta1 = 1.0 - J;
            k.c1 = 1.0 / K2;
            k.c2 = 1.0 + std::pow(L1, 4) / 2.0;
            k.c3 = 1.0 / (2.0 * K2);
            k.c4 = 2.0 * J * J;
            k.c5 = 0.25;
            k.dual_growth = DualGrowthConstants{1.0 + L1, 0.0, 0.0, 1.0};
            break;
        }
    }
    return k;
}

}  // namespace locmono
