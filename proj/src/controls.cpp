#include "locmono/controls.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "locmono/errors.hpp"

namespace locmono {

namespace {

// Relative slack kept below the budgets when projecting, so that a projected
// point is strictly admissible and a second projection leaves it untouched.
constexpr double kNormMargin = 1e-12;
constexpr double kSlopeMargin = 1e-10;

double row_norm(std::span<const double> row) {
    double s = 0.0;
    for (double x : row) s += x * x;
    return std::sqrt(s);
}

}  // namespace

void AdmissibleBounds::validate() const {
    auto check = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ParameterError(std::string("control bound ") + name + " must be finite and > 0");
        }
    };
    check(eta, "eta");
    check(lambda, "lambda");
    check(alpha, "alpha");
}

double AdmissibleBounds::gain_limit() const { return std::sqrt(alpha / 2.0); }
double AdmissibleBounds::slope_limit() const { return std::sqrt(lambda / 2.0); }

void ControlShape::validate() const {
    if (m_c == 0) throw ParameterError("control needs m_c >= 1");
    if (knots == 0) throw ParameterError("control needs at least one knot");
    if (!(T > 0.0) || !std::isfinite(T)) throw ParameterError("control horizon T must be > 0");
}

double ControlShape::knot_spacing() const noexcept {
    return knots > 1 ? T / static_cast<double>(knots - 1) : T;
}

bool is_admissible(std::span<const double> flat, const ControlShape& shape,
                   const AdmissibleBounds& bounds) {
    if (flat.size() != shape.flat_size()) return false;
    for (double x : flat) {
        if (!std::isfinite(x)) return false;
    }
    const double gmax = bounds.gain_limit();
    for (std::size_t k = 0; k < shape.m_c; ++k) {
        if (std::abs(flat[k]) > gmax) return false;
    }
    const std::size_t m = shape.m_c;
    const auto knot = [&](std::size_t i) { return flat.subspan(m + i * m, m); };
    const double g0 = row_norm(knot(0));
    if (g0 * g0 > bounds.eta) return false;
    const double budget = bounds.slope_limit() * shape.knot_spacing();
    std::vector<double> diff(m);
    for (std::size_t i = 0; i + 1 < shape.knots; ++i) {
        for (std::size_t j = 0; j < m; ++j) diff[j] = knot(i + 1)[j] - knot(i)[j];
        if (row_norm(diff) > budget) return false;
    }
    return true;
}

FeedbackControl project_admissible(std::span<const double> raw, const ControlShape& shape,
                                   const AdmissibleBounds& bounds) {
    shape.validate();
    bounds.validate();
    if (raw.size() != shape.flat_size()) {
        throw ConformanceError("control parameter vector has " + std::to_string(raw.size()) +
                               " entries, expected " + std::to_string(shape.flat_size()));
    }
    for (double x : raw) {
        if (!std::isfinite(x)) throw NumericDomainError("non-finite control parameter");
    }
    std::vector<double> out(raw.begin(), raw.end());
    if (is_admissible(out, shape, bounds)) return {shape, bounds, std::move(out)};

    const std::size_t m = shape.m_c;
    const double gmax = bounds.gain_limit();
    for (std::size_t k = 0; k < m; ++k) out[k] = std::clamp(out[k], -gmax, gmax);

    // increments of the raw offset, measured before g(0) moves
    std::vector<std::vector<double>> incr(shape.knots > 0 ? shape.knots - 1 : 0,
                                          std::vector<double>(m));
    for (std::size_t i = 0; i < incr.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            incr[i][j] = raw[m + (i + 1) * m + j] - raw[m + i * m + j];
        }
    }
    const std::span<double> g0(out.data() + m, m);
    const double n0 = row_norm(g0);
    if (n0 * n0 > bounds.eta) {
        const double scale = std::sqrt(bounds.eta) / n0 * (1.0 - kNormMargin);
        for (double& x : g0) x *= scale;
    }
    const double cap = bounds.slope_limit() * shape.knot_spacing() * (1.0 - kSlopeMargin);
    for (std::size_t i = 0; i < incr.size(); ++i) {
        const double n = row_norm(incr[i]);
        const double scale = n > cap ? cap / n : 1.0;
        for (std::size_t j = 0; j < m; ++j) {
            out[m + (i + 1) * m + j] = out[m + i * m + j] + scale * incr[i][j];
        }
    }
    if (!is_admissible(out, shape, bounds)) {
        throw InternalError("projection did not produce an admissible control");
    }
    return {shape, bounds, std::move(out)};
}

FeedbackControl::FeedbackControl(ControlShape shape, AdmissibleBounds bounds,
                                 std::vector<double> flat)
    : shape_(shape), bounds_(bounds), flat_(std::move(flat)) {
    shape_.validate();
    bounds_.validate();
    if (flat_.size() != shape_.flat_size()) {
        throw ConformanceError("control parameter vector has " + std::to_string(flat_.size()) +
                               " entries, expected " + std::to_string(shape_.flat_size()));
    }
    if (!is_admissible(flat_, shape_, bounds_)) {
        throw ParameterError("control parameters are not admissible");
    }
}

FeedbackControl FeedbackControl::zero(ControlShape shape, AdmissibleBounds bounds) {
    return {shape, bounds, std::vector<double>(shape.flat_size(), 0.0)};
}

std::span<const double> FeedbackControl::gammas() const noexcept {
    return std::span<const double>(flat_).first(shape_.m_c);
}

std::span<const double> FeedbackControl::knot(std::size_t i) const {
    if (i >= shape_.knots) throw RangeError("knot index out of range");
    return std::span<const double>(flat_).subspan(shape_.m_c + i * shape_.m_c, shape_.m_c);
}

bool FeedbackControl::is_zero() const noexcept {
    return std::all_of(flat_.begin(), flat_.end(), [](double x) { return x == 0.0; });
}

void FeedbackControl::check_time(double t) const {
    const double slack = 1e-12 * shape_.T;
    if (!(t >= -slack && t <= shape_.T + slack)) {
        throw RangeError("control evaluated at t = " + std::to_string(t) + " outside [0, " +
                         std::to_string(shape_.T) + "]");
    }
}

void FeedbackControl::check_grid(const Grid& g) const {
    if (shape_.m_c > g.n_interior()) {
        throw ConformanceError("control has more modes than the grid");
    }
}

std::vector<double> FeedbackControl::offset_coefficients(double t) const {
    check_time(t);
    const std::size_t m = shape_.m_c;
    std::vector<double> c(m);
    if (shape_.knots == 1) {
        auto k0 = knot(0);
        std::copy(k0.begin(), k0.end(), c.begin());
        return c;
    }
    const double pos = std::clamp(t, 0.0, shape_.T) / shape_.knot_spacing();
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i >= shape_.knots - 1) i = shape_.knots - 2;
    const double w = pos - static_cast<double>(i);
    auto a = knot(i), b = knot(i + 1);
    for (std::size_t j = 0; j < m; ++j) c[j] = a[j] + w * (b[j] - a[j]);
    return c;
}

StateVector FeedbackControl::offset(double t, const Grid& g) const {
    check_grid(g);
    return g.synthesize(offset_coefficients(t));
}

StateVector FeedbackControl::eval(double t, const StateVector& x, const Grid& g) const {
    check_grid(g);
    g.check(x);
    std::vector<double> c = offset_coefficients(t);
    const auto proj = g.mode_coefficients(x, shape_.m_c);
    const auto gam = gammas();
    for (std::size_t k = 0; k < shape_.m_c; ++k) c[k] += gam[k] * proj[k];
    return g.synthesize(c);
}

}  // namespace locmono
