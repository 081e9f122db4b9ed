#include "pat/wave.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "difference.hpp"
#include "pat/errors.hpp"
#include "pat/parallel.hpp"

namespace pat {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Calls visit(pixel_index, weight) for the bilinear stencil of p. Matches
// GridImage::sample: nothing outside the extent, zero beyond outer centers.
template <typename Visit>
inline void bilinear_stencil(const GridImage& grid, double inv_dx, double inv_dy, Point p, Visit&& visit) {
    const Extent& e = grid.extent();
    if (!(p.x >= e.x_min && p.x <= e.x_max && p.y >= e.y_min && p.y <= e.y_max)) return;
    const double fx = (p.x - e.x_min) * inv_dx - 0.5;
    const double fy = (e.y_max - p.y) * inv_dy - 0.5;
    const double cx = std::floor(fx);
    const double cy = std::floor(fy);
    const double wx = fx - cx;
    const double wy = fy - cy;
    const long c0 = static_cast<long>(cx);
    const long r0 = static_cast<long>(cy);
    const long w = static_cast<long>(grid.width());
    const long h = static_cast<long>(grid.height());
    const double weights[4] = {(1.0 - wx) * (1.0 - wy), wx * (1.0 - wy), (1.0 - wx) * wy, wx * wy};
    const long cols[4] = {c0, c0 + 1, c0, c0 + 1};
    const long rows[4] = {r0, r0, r0 + 1, r0 + 1};
    for (int k = 0; k < 4; ++k) {
        if (cols[k] < 0 || rows[k] < 0 || cols[k] >= w || rows[k] >= h) continue;
        visit(static_cast<std::size_t>(rows[k] * w + cols[k]), weights[k]);
    }
}

struct AngleWindow {
    long first = 0;
    long last = -1;
};

// Angular indices j (multiples of 2 pi / points) whose ray from `center` can
// meet the extent. Covers the full circle when center lies inside it.
AngleWindow angle_window(Point center, const Extent& e, std::size_t points) {
    const long n = static_cast<long>(points);
    if (e.contains(center)) return {0, n - 1};
    const Point mid = e.center();
    const double ref = std::atan2(mid.y - center.y, mid.x - center.x);
    const Point corners[4] = {{e.x_min, e.y_min}, {e.x_max, e.y_min}, {e.x_min, e.y_max}, {e.x_max, e.y_max}};
    double lo = 0.0;
    double hi = 0.0;
    for (const Point& c : corners) {
        double d = std::atan2(c.y - center.y, c.x - center.x) - ref;
        d = std::remainder(d, kTwoPi);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    const double step = kTwoPi / static_cast<double>(points);
    AngleWindow w{static_cast<long>(std::floor((ref + lo) / step)) - 1,
                  static_cast<long>(std::ceil((ref + hi) / step)) + 1};
    if (w.last - w.first + 1 >= n) return {0, n - 1};
    return w;
}

inline std::size_t wrap(long j, long n) {
    const long r = j % n;
    return static_cast<std::size_t>(r < 0 ? r + n : r);
}

}  // namespace

void ForwardConfig::validate() const {
    if (angular_points < 16) throw InvalidArgument("forward: angular_points must be >= 16");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidArgument("forward: t_end must be >= 0");
}

double max_distance(Point p, const Extent& e) {
    const double ex = std::max(std::abs(p.x - e.x_min), std::abs(p.x - e.x_max));
    const double ey = std::max(std::abs(p.y - e.y_min), std::abs(p.y - e.y_max));
    return std::sqrt(ex * ex + ey * ey);
}

double min_distance(Point p, const Extent& e) {
    const double ex = std::max({e.x_min - p.x, 0.0, p.x - e.x_max});
    const double ey = std::max({e.y_min - p.y, 0.0, p.y - e.y_max});
    return std::sqrt(ex * ex + ey * ey);
}

double circular_mean(const GridImage& image, Point center, double radius, std::size_t points) {
    if (!(radius >= 0.0)) throw InvalidArgument("circular_mean: radius must be >= 0");
    if (points == 0) throw InvalidArgument("circular_mean: need at least one quadrature point");
    const AngleWindow win = angle_window(center, image.extent(), points);
    const double step = kTwoPi / static_cast<double>(points);
    const double inv_dx = 1.0 / image.dx();
    const double inv_dy = 1.0 / image.dy();
    const auto values = image.values();
    double sum = 0.0;
    for (long j = win.first; j <= win.last; ++j) {
        const double angle = static_cast<double>(wrap(j, static_cast<long>(points))) * step;
        const Point p{center.x + radius * std::cos(angle), center.y + radius * std::sin(angle)};
        bilinear_stencil(image, inv_dx, inv_dy, p, [&](std::size_t idx, double w) { sum += w * values[idx]; });
    }
    return sum / static_cast<double>(points);
}

WaveOperator::WaveOperator(const GridImage& grid_template, SensorGeometry geometry, std::size_t samples,
                           double dt, ForwardConfig cfg)
    : template_(grid_template.zeros_like()),
      geometry_(std::move(geometry)),
      samples_(samples),
      dt_(dt),
      cfg_(cfg) {
    cfg_.validate();
    if (geometry_.size() < 2) throw InvalidArgument("forward: geometry needs >= 2 detectors");
    if (samples_ < 3) throw InvalidArgument("forward: need at least 3 time samples");
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw InvalidArgument("forward: dt must be positive");
    const double record_end = dt_ * static_cast<double>(samples_ - 1);
    const double t_end = cfg_.t_end > 0.0 ? cfg_.t_end : record_end;
    if (record_end > t_end * (1.0 + 1e-12)) {
        throw InvalidArgument("forward: record end (N-1) dt = " + std::to_string(record_end) +
                              " mm exceeds t_end = " + std::to_string(t_end) + " mm");
    }
    const Extent& extent = template_.extent();
    if (cfg_.require_coverage) {
        for (std::size_t m = 0; m < geometry_.size(); ++m) {
            const double reach = max_distance(geometry_.position(m), extent);
            if (reach > t_end) {
                throw InvalidArgument("forward: t_end = " + std::to_string(t_end) + " mm does not cover the extent from detector " +
                                      std::to_string(m) + " (needs " + std::to_string(reach) + " mm)");
            }
        }
    }

    const std::size_t points = cfg_.angular_points;
    cos_table_.resize(points);
    sin_table_.resize(points);
    const double step = kTwoPi / static_cast<double>(points);
    for (std::size_t j = 0; j < points; ++j) {
        cos_table_[j] = std::cos(static_cast<double>(j) * step);
        sin_table_[j] = std::sin(static_cast<double>(j) * step);
    }

    windows_.resize(geometry_.size());
    for (std::size_t m = 0; m < geometry_.size(); ++m) {
        const Point s = geometry_.position(m);
        const AngleWindow aw = angle_window(s, extent, points);
        DetectorWindow& w = windows_[m];
        w.first_angle = aw.first;
        w.last_angle = aw.last;
        const double lo = min_distance(s, extent) / dt_;
        const double hi = max_distance(s, extent) / dt_;
        w.first_radius = std::min(samples_ - 1, static_cast<std::size_t>(std::floor(lo)));
        w.last_radius = std::min(samples_ - 1, static_cast<std::size_t>(std::ceil(hi)));
    }

    // Abel coefficients for q(t_n) = dt * int_0^n u m(u) / sqrt(n^2 - u^2) du
    // with m piecewise linear on unit cells. With u = n sin(phi) each cell
    // [a, b] contributes
    //   J0 = int u / sqrt(n^2 - u^2)   = sqrt(n^2 - a^2) - sqrt(n^2 - b^2),
    //   J1 = int u^2 / sqrt(n^2 - u^2) = (n^2 (phi_b - phi_a) - b sqrt(n^2-b^2) + a sqrt(n^2-a^2)) / 2,
    // split onto the cell's end nodes as (b J0 - J1, J1 - a J0).
    abel_.assign(samples_ * (samples_ + 1) / 2, 0.0);
    for (std::size_t n = 1; n < samples_; ++n) {
        const double nn = static_cast<double>(n);
        double* row = abel_.data() + n * (n + 1) / 2;
        double root_a = nn;  // sqrt(n^2 - a^2) at a = 0
        double phi_a = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            const double a = static_cast<double>(l);
            const double b = a + 1.0;
            const double root_b = (l + 1 == n) ? 0.0 : std::sqrt((nn - b) * (nn + b));
            const double phi_b = (l + 1 == n) ? 0.5 * std::numbers::pi : std::asin(b / nn);
            const double j0 = root_a - root_b;
            const double j1 = 0.5 * (nn * nn * (phi_b - phi_a) - b * root_b + a * root_a);
            row[l] += (b * j0 - j1) * dt_;
            row[l + 1] += (j1 - a * j0) * dt_;
            root_a = root_b;
            phi_a = phi_b;
        }
    }
}

void WaveOperator::check_image(const GridImage& image) const {
    if (image.width() != template_.width() || image.height() != template_.height() ||
        !(image.extent() == template_.extent())) {
        throw InvalidArgument("forward: image grid does not match the operator's grid");
    }
}

void WaveOperator::check_sinogram(const Sinogram& sino) const {
    if (sino.samples() != samples_ || sino.detectors() != geometry_.size() ||
        !(sino.geometry() == geometry_) || sino.dt() != dt_) {
        throw InvalidArgument("adjoint: sinogram shape or geometry does not match the operator");
    }
}

Sinogram WaveOperator::forward(const GridImage& image) const {
    check_image(image);
    Sinogram out(geometry_, samples_, dt_);
    const auto values = image.values();
    const double inv_dx = 1.0 / template_.dx();
    const double inv_dy = 1.0 / template_.dy();
    const long points = static_cast<long>(cfg_.angular_points);
    const double inv_points = 1.0 / static_cast<double>(points);

    parallel_for(geometry_.size(), [&](std::size_t m) {
        const Point s = geometry_.position(m);
        const DetectorWindow& w = windows_[m];
        std::vector<double> means(samples_, 0.0);
        for (std::size_t l = w.first_radius; l <= w.last_radius; ++l) {
            const double rho = static_cast<double>(l) * dt_;
            double sum = 0.0;
            for (long j = w.first_angle; j <= w.last_angle; ++j) {
                const std::size_t k = wrap(j, points);
                const Point p{s.x + rho * cos_table_[k], s.y + rho * sin_table_[k]};
                bilinear_stencil(template_, inv_dx, inv_dy, p,
                                 [&](std::size_t idx, double wt) { sum += wt * values[idx]; });
            }
            means[l] = sum * inv_points;
        }
        std::vector<double> q(samples_, 0.0);
        for (std::size_t n = 1; n < samples_; ++n) {
            const double* coef = abel_.data() + n * (n + 1) / 2;
            const std::size_t hi = std::min(n, w.last_radius);
            double acc = 0.0;
            for (std::size_t l = w.first_radius; l <= hi; ++l) acc += coef[l] * means[l];
            q[n] = acc;
        }
        detail::differentiate(q, dt_, out.row(m));
    });
    return out;
}

GridImage WaveOperator::adjoint(const Sinogram& sino) const {
    check_sinogram(sino);
    const std::size_t pixels = template_.size();
    const double inv_dx = 1.0 / template_.dx();
    const double inv_dy = 1.0 / template_.dy();
    const long points = static_cast<long>(cfg_.angular_points);
    const double inv_points = 1.0 / static_cast<double>(points);
    std::vector<std::vector<double>> partial(geometry_.size());

    parallel_for(geometry_.size(), [&](std::size_t m) {
        const Point s = geometry_.position(m);
        const DetectorWindow& w = windows_[m];
        std::vector<double> g(samples_);
        detail::differentiate_transpose(sino.row(m), dt_, g);
        std::vector<double> h(samples_, 0.0);
        for (std::size_t n = 1; n < samples_; ++n) {
            const double* coef = abel_.data() + n * (n + 1) / 2;
            const std::size_t hi = std::min(n, w.last_radius);
            for (std::size_t l = w.first_radius; l <= hi; ++l) h[l] += coef[l] * g[n];
        }
        std::vector<double>& img = partial[m];
        img.assign(pixels, 0.0);
        for (std::size_t l = w.first_radius; l <= w.last_radius; ++l) {
            const double rho = static_cast<double>(l) * dt_;
            const double share = h[l] * inv_points;
            if (share == 0.0) continue;
            for (long j = w.first_angle; j <= w.last_angle; ++j) {
                const std::size_t k = wrap(j, points);
                const Point p{s.x + rho * cos_table_[k], s.y + rho * sin_table_[k]};
                bilinear_stencil(template_, inv_dx, inv_dy, p,
                                 [&](std::size_t idx, double wt) { img[idx] += wt * share; });
            }
        }
    });

    GridImage out = template_.zeros_like();
    auto dst = out.values();
    for (const auto& img : partial) {
        for (std::size_t i = 0; i < pixels; ++i) dst[i] += img[i];
    }
    return out;
}

Sinogram forward(const GridImage& image, const SensorGeometry& geometry, std::size_t samples, double dt,
                 const ForwardConfig& cfg) {
    return WaveOperator(image, geometry, samples, dt, cfg).forward(image);
}

GridImage adjoint(const Sinogram& sino, const GridImage& grid_template, const ForwardConfig& cfg) {
    return WaveOperator(grid_template, sino.geometry(), sino.samples(), sino.dt(), cfg).adjoint(sino);
}

Sinogram add_noise(const Sinogram& sino, double level, Seed seed, NoiseReference reference) {
    if (!(level >= 0.0) || !std::isfinite(level)) throw InvalidArgument("noise level must be >= 0");
    Sinogram out = sino;
    if (level == 0.0) return out;
    const auto v = sino.values();
    double scale = 0.0;
    if (reference == NoiseReference::StdDev) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        scale = std::sqrt(var / static_cast<double>(v.size()));
    } else {
        for (double x : v) scale = std::max(scale, std::abs(x));
    }
    const double sigma = level * scale;
    Rng rng(seed);
    for (auto& x : out.values()) x += sigma * rng.normal();
    return out;
}

}  // namespace pat
