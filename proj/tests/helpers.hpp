#pragma once

#include <cmath>
#include <cstdint>

#include "locmono/rng.hpp"
#include "locmono/spaces.hpp"

namespace locmono::testing {

/// Random nodal vector with standard normal entries.
inline StateVector random_vector(const Grid& g, std::uint64_t index, double scale = 1.0) {
    RandomStream rng(7, streams::test, index);
    StateVector v(g.n_interior());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = scale * rng.normal();
    return v;
}

/// Smooth random state: a few low modes.
inline StateVector smooth_vector(const Grid& g, std::uint64_t index, std::size_t modes = 6) {
    RandomStream rng(11, streams::test, index);
    std::vector<double> c(modes);
    for (std::size_t k = 0; k < modes; ++k) c[k] = rng.normal() / static_cast<double>(k + 1);
    return g.synthesize(c);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace locmono::testing
