#include "locmono/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "locmono/errors.hpp"

namespace locmono {

bool StateVector::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

bool StateVector::is_zero() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return x == 0.0; });
}

namespace {
void require_same_size(const StateVector& a, const StateVector& b) {
    if (a.size() != b.size()) {
        throw ConformanceError("state size mismatch: " + std::to_string(a.size()) + " vs " +
                               std::to_string(b.size()));
    }
}
}  // namespace

StateVector& StateVector::operator+=(const StateVector& other) {
    require_same_size(*this, other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

StateVector& StateVector::operator-=(const StateVector& other) {
    require_same_size(*this, other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

StateVector& StateVector::operator*=(double factor) noexcept {
    for (double& x : values_) x *= factor;
    return *this;
}

StateVector& StateVector::axpy(double factor, const StateVector& other) {
    require_same_size(*this, other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += factor * other.values_[i];
    return *this;
}

StateVector operator+(StateVector lhs, const StateVector& rhs) { return lhs += rhs; }
StateVector operator-(StateVector lhs, const StateVector& rhs) { return lhs -= rhs; }
StateVector operator*(double factor, StateVector v) { return v *= factor; }

StateVector hadamard(const StateVector& a, const StateVector& b) {
    require_same_size(a, b);
    StateVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Grid::Grid(std::size_t n_interior) : n_(n_interior) {
    if (n_ == 0) throw ParameterError("grid needs at least one interior node");
    h_ = 1.0 / static_cast<double>(n_ + 1);
    nodes_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) nodes_[i] = static_cast<double>(i + 1) * h_;

    eigenvalues_.resize(n_);
    modes_.resize(n_ * n_);
    const double pi = std::numbers::pi;
    for (std::size_t k = 1; k <= n_; ++k) {
        const double s = std::sin(static_cast<double>(k) * pi * h_ / 2.0);
        eigenvalues_[k - 1] = 4.0 * s * s / (h_ * h_);
        double* row = modes_.data() + (k - 1) * n_;
        for (std::size_t i = 1; i <= n_; ++i) {
            // integer product keeps the argument exact before scaling by πh
            const auto ki = static_cast<double>((k * i) % (2 * (n_ + 1)));
            row[i - 1] = std::numbers::sqrt2 * std::sin(ki * pi * h_);
        }
    }
}

std::span<const double> Grid::mode(std::size_t k) const {
    if (k < 1 || k > n_) throw RangeError("mode index " + std::to_string(k) + " out of range");
    return {modes_.data() + (k - 1) * n_, n_};
}

double Grid::eigenvalue(std::size_t k) const {
    if (k < 1 || k > n_) throw RangeError("mode index " + std::to_string(k) + " out of range");
    return eigenvalues_[k - 1];
}

double Grid::mode_sup_sq(std::size_t k) const {
    double m = 0.0;
    for (double x : mode(k)) m = std::max(m, x * x);
    return m;
}

StateVector Grid::mode_vector(std::size_t k) const {
    auto m = mode(k);
    return StateVector(std::vector<double>(m.begin(), m.end()));
}

void Grid::check(const StateVector& v) const {
    if (v.size() != n_) {
        throw ConformanceError("state has " + std::to_string(v.size()) + " entries, grid has " +
                               std::to_string(n_));
    }
}

StateVector Grid::laplacian(const StateVector& v) const {
    check(v);
    const double inv_h2 = 1.0 / (h_ * h_);
    StateVector out(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        const double left = i > 0 ? v[i - 1] : 0.0;
        const double right = i + 1 < n_ ? v[i + 1] : 0.0;
        out[i] = (left - 2.0 * v[i] + right) * inv_h2;
    }
    return out;
}

StateVector Grid::solve_negative_laplacian(const StateVector& f) const {
    check(f);
    const double inv_h2 = 1.0 / (h_ * h_);
    std::vector<double> off(n_, -inv_h2), diag(n_, 2.0 * inv_h2);
    auto w = solve_tridiagonal(off, diag, off, f.span());
    StateVector out(std::move(w));
    if (!out.all_finite()) throw InternalError("Dirichlet Laplacian solve produced non-finite values");
    return out;
}

StateVector Grid::solve_shifted(double c, const StateVector& rhs) const {
    check(rhs);
    const double r = c / (h_ * h_);
    std::vector<double> off(n_, -r), diag(n_, 1.0 + 2.0 * r);
    return StateVector(solve_tridiagonal(off, diag, off, rhs.span()));
}

std::vector<double> Grid::mode_coefficients(const StateVector& x, std::size_t m) const {
    check(x);
    m = std::min(m, n_);
    std::vector<double> c(m);
    for (std::size_t k = 1; k <= m; ++k) {
        auto e = mode(k);
        double s = 0.0;
        for (std::size_t i = 0; i < n_; ++i) s += x[i] * e[i];
        c[k - 1] = h_ * s;
    }
    return c;
}

StateVector Grid::synthesize(std::span<const double> coefficients) const {
    if (coefficients.size() > n_) throw RangeError("more coefficients than grid modes");
    StateVector out(n_);
    for (std::size_t k = 1; k <= coefficients.size(); ++k) {
        const double c = coefficients[k - 1];
        if (c == 0.0) continue;
        auto e = mode(k);
        for (std::size_t i = 0; i < n_; ++i) out[i] += c * e[i];
    }
    return out;
}

std::vector<double> solve_tridiagonal(std::span<const double> sub, std::span<const double> diag,
                                      std::span<const double> super, std::span<const double> rhs) {
    const std::size_t n = diag.size();
    if (sub.size() != n || super.size() != n || rhs.size() != n) {
        throw ConformanceError("tridiagonal system with inconsistent sizes");
    }
    std::vector<double> c_star(n), x(n);
    double m = diag[0];
    c_star[0] = super[0] / m;
    x[0] = rhs[0] / m;
    for (std::size_t i = 1; i < n; ++i) {
        m = diag[i] - sub[i] * c_star[i - 1];
        c_star[i] = super[i] / m;
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / m;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c_star[i] * x[i + 1];
    return x;
}

double h_inner(const StateVector& u, const StateVector& v, const Grid& g) {
    g.check(u);
    g.check(v);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return g.h() * s;
}

double h_norm(const StateVector& u, const Grid& g) { return std::sqrt(h_inner(u, u, g)); }

double v_inner(const StateVector& u, const StateVector& v, const Grid& g) {
    g.check(u);
    g.check(v);
    const std::size_t n = u.size();
    double s = 0.0;
    for (std::size_t e = 0; e <= n; ++e) {
        const double du = (e < n ? u[e] : 0.0) - (e > 0 ? u[e - 1] : 0.0);
        const double dv = (e < n ? v[e] : 0.0) - (e > 0 ? v[e - 1] : 0.0);
        s += du * dv;
    }
    return s / g.h();
}

double v_norm(const StateVector& u, const Grid& g) { return std::sqrt(v_inner(u, u, g)); }

double vprime_norm(const StateVector& f, const Grid& g) {
    if (f.is_zero()) {
        g.check(f);
        return 0.0;
    }
    return v_norm(g.solve_negative_laplacian(f), g);
}

double laplacian_pairing(const StateVector& v, const StateVector& w, const Grid& g) {
    return -v_inner(v, w, g);
}

double embedding_constant(const Grid& g) { return 1.0 / g.eigenvalue(1); }

double integral(const StateVector& v, const Grid& g) {
    g.check(v);
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i];
    return g.h() * s;
}

}  // namespace locmono
