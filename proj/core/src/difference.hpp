#pragma once

#include <cstddef>
#include <span>

namespace pat::detail {

// Second-order time derivative on a uniform grid: central differences in the
// interior, one-sided three-point stencils at both ends. Requires n >= 3.
inline void differentiate(std::span<const double> in, double dt, std::span<double> out) {
    const std::size_t n = in.size();
    const double s = 1.0 / (2.0 * dt);
    out[0] = (-3.0 * in[0] + 4.0 * in[1] - in[2]) * s;
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (in[i + 1] - in[i - 1]) * s;
    out[n - 1] = (3.0 * in[n - 1] - 4.0 * in[n - 2] + in[n - 3]) * s;
}

// Exact transpose of differentiate().
inline void differentiate_transpose(std::span<const double> in, double dt, std::span<double> out) {
    const std::size_t n = in.size();
    const double s = 1.0 / (2.0 * dt);
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
    out[0] += -3.0 * in[0] * s;
    out[1] += 4.0 * in[0] * s;
    out[2] += -in[0] * s;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        out[i + 1] += in[i] * s;
        out[i - 1] -= in[i] * s;
    }
    out[n - 1] += 3.0 * in[n - 1] * s;
    out[n - 2] += -4.0 * in[n - 1] * s;
    out[n - 3] += in[n - 1] * s;
}

}  // namespace pat::detail
