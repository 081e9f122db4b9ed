#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pat/geometry.hpp"

namespace pat {

struct FbpConfig {
    /// Truncation time of the inner integral in mm; 0 means the record end.
    double t_end = 0.0;
    /// Only one rule is implemented: t = d cosh(u) with (dp/dt) linear in t.
    std::string inner_rule = "cosh-linear";
};

/// Second-order finite-difference time derivative of every detector row.
/// Throws InvalidArgument when N < 3.
Sinogram time_derivative(const Sinogram& sino);

/// Discrete FBP for detectors on the circle of radius R:
///   B(y)(r) = -(1 / (pi R)) sum_m w_m I_m(|r - s_m|),
///   I_m(d)  = int_d^{t_end} t (d/dt) y_m(t) / sqrt(t^2 - d^2) dt,
/// with w_m the arc-length weight. The weight t in the inner integrand is
/// what makes the formula dimensionally consistent (and exact on the full
/// circle). I_m is evaluated exactly for an integrand that is linear between
/// time samples (the singularity at t = d disappears under t = d cosh(u)) on
/// the distance grid d_j = j dt, and linearly interpolated in d at each
/// pixel. Data after t_end are never read.
class FbpOperator {
public:
    FbpOperator(const GridImage& grid_template, SensorGeometry geometry, std::size_t samples, double dt,
                FbpConfig cfg = {});

    GridImage apply(const Sinogram& sino) const;

    /// Samples 0..last_sample() are used.
    std::size_t last_sample() const { return last_sample_; }
    /// True when every detector's t_end-circle covers the extent.
    bool covers_extent() const { return covers_; }

private:
    const double* row(std::size_t j) const { return table_.data() + offsets_[j - first_j_]; }

    GridImage template_;
    SensorGeometry geometry_;
    std::size_t samples_;
    double dt_;
    FbpConfig cfg_;
    std::size_t last_sample_ = 0;
    bool covers_ = true;
    std::size_t first_j_ = 0;
    std::size_t last_j_ = 0;
    // For distance index j, coefficients on samples j..last_sample_.
    std::vector<std::size_t> offsets_;
    std::vector<double> table_;
};

GridImage fbp_reconstruct(const Sinogram& sino, const GridImage& grid_template, const FbpConfig& cfg = {});

}  // namespace pat
