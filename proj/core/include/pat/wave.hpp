#pragma once

#include <cstddef>
#include <vector>

#include "pat/geometry.hpp"
#include "pat/rng.hpp"

namespace pat {

struct ForwardConfig {
    /// Uniform angular quadrature points on each full circle (only the points
    /// that can hit the image extent are evaluated).
    std::size_t angular_points = 4096;
    /// Final measurement time in mm; 0 means the record end (N - 1) dt.
    double t_end = 0.0;
    /// Require every detector's t_end-circle to cover the whole extent.
    bool require_coverage = true;

    void validate() const;
};

/// (1/2 pi) * integral of image(center + radius * w) over the unit circle,
/// by `points`-point uniform angular quadrature with bilinear interpolation.
double circular_mean(const GridImage& image, Point center, double radius,
                     std::size_t points = 4096);

/// Largest distance from `p` to any point of the extent.
double max_distance(Point p, const Extent& extent);
/// Distance from `p` to the extent (0 inside).
double min_distance(Point p, const Extent& extent);

/// Discrete PAT forward map and its transpose for a fixed grid, geometry and
/// time axis. Applying it is matrix-free; only the time-radius coupling is
/// tabulated.
///
/// For detector s the discrete data are
///   p(s, t_n) = D[ q ](t_n),   q(t) = int_0^t rho m(s, rho) / sqrt(t^2 - rho^2) drho,
/// where m(s, rho) is the circular mean of the image about s, sampled on the
/// radius grid rho_l = l dt and linearly interpolated in rho, the inner
/// integral is evaluated exactly after the substitution rho = t sin(phi), and
/// D is the second-order finite-difference derivative in t.
class WaveOperator {
public:
    WaveOperator(const GridImage& grid_template, SensorGeometry geometry, std::size_t samples,
                 double dt, ForwardConfig cfg = {});

    Sinogram forward(const GridImage& image) const;
    GridImage adjoint(const Sinogram& sino) const;

    const GridImage& grid_template() const { return template_; }
    const SensorGeometry& geometry() const { return geometry_; }
    std::size_t samples() const { return samples_; }
    double dt() const { return dt_; }
    const ForwardConfig& config() const { return cfg_; }

private:
    struct DetectorWindow {
        long first_angle = 0;   // may be negative; wrap modulo angular_points
        long last_angle = -1;
        std::size_t first_radius = 0;
        std::size_t last_radius = 0;  // inclusive
    };

    void check_image(const GridImage& image) const;
    void check_sinogram(const Sinogram& sino) const;
    double abel(std::size_t n, std::size_t l) const { return abel_[n * (n + 1) / 2 + l]; }

    GridImage template_;
    SensorGeometry geometry_;
    std::size_t samples_;
    double dt_;
    ForwardConfig cfg_;
    std::vector<double> cos_table_;
    std::vector<double> sin_table_;
    std::vector<DetectorWindow> windows_;
    // Packed lower triangle: abel_[n (n+1)/2 + l], l <= n, already scaled by dt.
    std::vector<double> abel_;
};

Sinogram forward(const GridImage& image, const SensorGeometry& geometry, std::size_t samples,
                 double dt, const ForwardConfig& cfg = {});
GridImage adjoint(const Sinogram& sino, const GridImage& grid_template, const ForwardConfig& cfg = {});

enum class NoiseReference {
    StdDev,  // sigma = level * std(data)
    MaxAbs,  // sigma = level * max |data|
};

/// i.i.d. Gaussian noise with standard deviation level * reference(data).
Sinogram add_noise(const Sinogram& sino, double level, Seed seed,
                   NoiseReference reference = NoiseReference::StdDev);

}  // namespace pat
