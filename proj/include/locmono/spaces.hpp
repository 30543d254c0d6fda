#pragma once

// Discrete Gelfand triple V = H^1_0(0,1) ⊂ H = L^2(0,1) ⊂ V' = H^{-1}(0,1) on a
// uniform grid of interior nodes with homogeneous Dirichlet boundary values.
//
// States are nodal vectors. The H inner product is the Riemann sum h·Σ u_i v_i,
// the V norm is the first-difference seminorm including both boundary edges, and
// the V' norm is obtained by an exact tridiagonal inverse of the discrete Laplacian.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace locmono {

/// Nodal values at the interior nodes of a Grid.
class StateVector {
public:
    StateVector() = default;
    explicit StateVector(std::size_t n, double value = 0.0) : values_(n, value) {}
    explicit StateVector(std::vector<double> values) : values_(std::move(values)) {}
    StateVector(std::initializer_list<double> values) : values_(values) {}

    std::size_t size() const noexcept { return values_.size(); }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<double> span() noexcept { return values_; }
    std::span<const double> span() const noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    bool all_finite() const noexcept;
    bool is_zero() const noexcept;

    StateVector& operator+=(const StateVector& other);
    StateVector& operator-=(const StateVector& other);
    StateVector& operator*=(double factor) noexcept;

    /// this += factor * other
    StateVector& axpy(double factor, const StateVector& other);

    friend bool operator==(const StateVector&, const StateVector&) = default;

private:
    std::vector<double> values_;
};

StateVector operator+(StateVector lhs, const StateVector& rhs);
StateVector operator-(StateVector lhs, const StateVector& rhs);
StateVector operator*(double factor, StateVector v);
/// Pointwise product.
StateVector hadamard(const StateVector& a, const StateVector& b);

/// Uniform grid on (0,1) with `n_interior` unknowns, mesh width h = 1/(n_interior+1).
///
/// Carries the discrete sine basis e_k(x_i) = √2·sin(kπx_i), k = 1..n, which is
/// orthonormal under h_inner, and the eigenvalues λ_k = (4/h²)·sin²(kπh/2) of the
/// negative discrete Laplacian.
class Grid {
public:
    explicit Grid(std::size_t n_interior);

    std::size_t n_interior() const noexcept { return n_; }
    double h() const noexcept { return h_; }
    std::span<const double> nodes() const noexcept { return nodes_; }

    /// Mode e_k for k in [1, n_interior].
    std::span<const double> mode(std::size_t k) const;
    double eigenvalue(std::size_t k) const;
    /// max_i |e_k(x_i)|²
    double mode_sup_sq(std::size_t k) const;

    StateVector zeros() const { return StateVector(n_); }
    StateVector mode_vector(std::size_t k) const;
    /// Samples f at the interior nodes.
    template <class F>
    StateVector sample(F&& f) const {
        StateVector v(n_);
        for (std::size_t i = 0; i < n_; ++i) v[i] = f(nodes_[i]);
        return v;
    }

    /// Dirichlet second-difference operator (u_{i-1} - 2u_i + u_{i+1})/h².
    StateVector laplacian(const StateVector& v) const;
    /// Solves -Δ_h w = f exactly (tridiagonal).
    StateVector solve_negative_laplacian(const StateVector& f) const;
    /// Solves (I - c·Δ_h) w = rhs for c >= 0.
    StateVector solve_shifted(double c, const StateVector& rhs) const;

    /// Throws ConformanceError unless v has n_interior entries.
    void check(const StateVector& v) const;

    /// First m coefficients ⟨x, e_k⟩ (k = 1..m).
    std::vector<double> mode_coefficients(const StateVector& x, std::size_t m) const;
    /// Σ_k c_k e_k over the given coefficients.
    StateVector synthesize(std::span<const double> coefficients) const;

    friend bool operator==(const Grid& a, const Grid& b) noexcept { return a.n_ == b.n_; }

private:
    std::size_t n_;
    double h_;
    std::vector<double> nodes_;
    std::vector<double> eigenvalues_;
    std::vector<double> modes_;  // row k-1 holds e_k
};

/// Thomas algorithm for a tridiagonal system; all spans have the system size,
/// sub[0] and super[n-1] are ignored.
std::vector<double> solve_tridiagonal(std::span<const double> sub, std::span<const double> diag,
                                      std::span<const double> super, std::span<const double> rhs);

double h_inner(const StateVector& u, const StateVector& v, const Grid& g);
double h_norm(const StateVector& u, const Grid& g);
/// Edge-difference inner product h·Σ_edges (Du)(Dv) with zero boundary ghosts.
double v_inner(const StateVector& u, const StateVector& v, const Grid& g);
double v_norm(const StateVector& u, const Grid& g);
double vprime_norm(const StateVector& f, const Grid& g);
/// ⟨Δ_h v, w⟩ evaluated by discrete integration by parts, i.e. -v_inner(v, w).
double laplacian_pairing(const StateVector& v, const StateVector& w, const Grid& g);
/// c_HV = 1/λ_1, the sharp constant in ‖v‖² ≤ c_HV‖v‖_V².
double embedding_constant(const Grid& g);
/// Riemann sum h·Σ v_i approximating ∫_0^1 v dx.
double integral(const StateVector& v, const Grid& g);

/// Upper bound for embedding_constant valid on every grid (λ_1 >= 8).
inline constexpr double kEmbeddingBound = 0.125;

}  // namespace locmono
