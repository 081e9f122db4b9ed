#include "pat/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pat/errors.hpp"

namespace pat {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_extent(const Extent& e) {
    if (!(e.x_max > e.x_min) || !(e.y_max > e.y_min) || !std::isfinite(e.x_min) ||
        !std::isfinite(e.x_max) || !std::isfinite(e.y_min) || !std::isfinite(e.y_max)) {
        throw InvalidArgument("extent must have strictly positive, finite side lengths");
    }
}

bool finite_all(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

GridImage::GridImage(std::size_t width, std::size_t height, Extent extent)
    : GridImage(width, height, extent, std::vector<double>(width * height, 0.0)) {}

GridImage::GridImage(std::size_t width, std::size_t height, Extent extent, std::vector<double> values)
    : width_(width), height_(height), extent_(extent), values_(std::move(values)) {
    if (width == 0 || height == 0) throw InvalidArgument("image dimensions must be positive");
    check_extent(extent);
    if (values_.size() != width * height) {
        throw InvalidArgument("image value count " + std::to_string(values_.size()) +
                              " does not match " + std::to_string(width) + "x" +
                              std::to_string(height));
    }
}

double GridImage::sample(Point p) const {
    if (!extent_.contains(p)) return 0.0;
    const double fx = (p.x - extent_.x_min) / dx() - 0.5;
    const double fy = (extent_.y_max - p.y) / dy() - 0.5;
    const double cx = std::floor(fx);
    const double cy = std::floor(fy);
    const double wx = fx - cx;
    const double wy = fy - cy;
    const auto c0 = static_cast<long>(cx);
    const auto r0 = static_cast<long>(cy);
    const auto w = static_cast<long>(width_);
    const auto h = static_cast<long>(height_);
    auto value = [&](long c, long r) {
        if (c < 0 || r < 0 || c >= w || r >= h) return 0.0;
        return values_[static_cast<std::size_t>(r * w + c)];
    };
    return (1.0 - wy) * ((1.0 - wx) * value(c0, r0) + wx * value(c0 + 1, r0)) +
           wy * ((1.0 - wx) * value(c0, r0 + 1) + wx * value(c0 + 1, r0 + 1));
}

bool GridImage::all_finite() const { return finite_all(values_); }

double SensorGeometry::angle(std::size_t m) const {
    const double step = (theta_end_ - theta_start_) / static_cast<double>(positions_.size());
    return theta_start_ + (static_cast<double>(m) + 0.5) * step;
}

double SensorGeometry::weight() const {
    return radius_ * (theta_end_ - theta_start_) / static_cast<double>(positions_.size());
}

bool SensorGeometry::is_full_circle() const {
    return std::abs((theta_end_ - theta_start_) - kTwoPi) < 1e-12;
}

SensorGeometry make_arc_geometry(double radius, std::size_t count, double theta_start,
                                 double theta_end) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw InvalidArgument("sensor radius must be positive");
    }
    if (count < 2) throw InvalidArgument("need at least 2 detectors");
    if (!(theta_start < theta_end) || theta_end - theta_start > kTwoPi + 1e-12) {
        throw InvalidArgument("arc must satisfy theta_start < theta_end <= theta_start + 2 pi");
    }
    SensorGeometry g;
    g.radius_ = radius;
    g.theta_start_ = theta_start;
    g.theta_end_ = theta_end;
    g.positions_.reserve(count);
    const double step = (theta_end - theta_start) / static_cast<double>(count);
    for (std::size_t m = 0; m < count; ++m) {
        const double theta = theta_start + (static_cast<double>(m) + 0.5) * step;
        g.positions_.push_back({radius * std::cos(theta), radius * std::sin(theta)});
    }
    return g;
}

SensorGeometry make_full_circle(double radius, std::size_t count) {
    return make_arc_geometry(radius, count, 0.0, kTwoPi);
}

SensorGeometry make_lower_arc(double radius, std::size_t count, double y_cut) {
    if (!(radius > 0.0)) throw InvalidArgument("sensor radius must be positive");
    if (!(std::abs(y_cut) < radius)) throw InvalidArgument("arc cut must satisfy |y_cut| < radius");
    // s_2 = R sin(theta) < y_cut  <=>  theta in (pi - asin(y_cut/R), 2 pi + asin(y_cut/R)).
    const double alpha = std::asin(y_cut / radius);
    return make_arc_geometry(radius, count, std::numbers::pi - alpha, kTwoPi + alpha);
}

Sinogram::Sinogram(SensorGeometry geometry, std::size_t samples, double dt)
    : Sinogram(geometry, samples, dt, std::vector<double>(geometry.size() * samples, 0.0)) {}

Sinogram::Sinogram(SensorGeometry geometry, std::size_t samples, double dt, std::vector<double> values)
    : geometry_(std::move(geometry)), samples_(samples), dt_(dt), values_(std::move(values)) {
    if (geometry_.size() < 2) throw InvalidArgument("sinogram needs a geometry with >= 2 detectors");
    if (samples < 2) throw InvalidArgument("sinogram needs at least 2 time samples");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive");
    if (values_.size() != geometry_.size() * samples) {
        throw InvalidArgument("sinogram value count does not match M x N");
    }
}

bool Sinogram::all_finite() const { return finite_all(values_); }

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace pat
