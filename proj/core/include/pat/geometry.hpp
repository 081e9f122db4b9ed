#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace pat {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

/// Physical rectangle [x_min, x_max] x [y_min, y_max] in mm.
struct Extent {
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    Point center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
    bool contains(Point p) const {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
    }

    friend bool operator==(const Extent&, const Extent&) = default;
};

/// Default imaging domain [-10, 10] x [-20, 5] mm.
inline constexpr Extent kDefaultExtent{-10.0, 10.0, -20.0, 5.0};

/// Image on a physical rectangle. Row-major, row 0 is the top row (y = y_max).
/// Pixel (col, row) has its center at
///   x = x_min + (col + 1/2) dx,  y = y_max - (row + 1/2) dy.
/// Values are held in double precision; the on-disk container stores f32.
class GridImage {
public:
    GridImage() = default;
    /// Zero image. Throws InvalidArgument on empty sizes or a degenerate extent.
    GridImage(std::size_t width, std::size_t height, Extent extent);
    GridImage(std::size_t width, std::size_t height, Extent extent, std::vector<double> values);

    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    std::size_t size() const { return values_.size(); }
    const Extent& extent() const { return extent_; }

    double dx() const { return extent_.width() / static_cast<double>(width_); }
    double dy() const { return extent_.height() / static_cast<double>(height_); }
    double pixel_area() const { return dx() * dy(); }
    double x_center(std::size_t col) const {
        return extent_.x_min + (static_cast<double>(col) + 0.5) * dx();
    }
    double y_center(std::size_t row) const {
        return extent_.y_max - (static_cast<double>(row) + 0.5) * dy();
    }
    Point center_of(std::size_t col, std::size_t row) const { return {x_center(col), y_center(row)}; }

    double& at(std::size_t col, std::size_t row) { return values_[row * width_ + col]; }
    double at(std::size_t col, std::size_t row) const { return values_[row * width_ + col]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    /// Bilinear interpolation between pixel centers. Points outside the extent
    /// are 0; neighbours beyond the outermost centers count as 0.
    double sample(Point p) const;

    /// Same-shaped image with all values zero.
    GridImage zeros_like() const { return GridImage(width_, height_, extent_); }

    bool all_finite() const;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    Extent extent_{};
    std::vector<double> values_;
};

/// Detectors on an arc of the circle |s| = radius, at the angular midpoints
/// theta_start + (m + 1/2)(theta_end - theta_start)/M.
class SensorGeometry {
public:
    SensorGeometry() = default;

    double radius() const { return radius_; }
    double theta_start() const { return theta_start_; }
    double theta_end() const { return theta_end_; }
    std::size_t size() const { return positions_.size(); }
    const std::vector<Point>& positions() const { return positions_; }
    Point position(std::size_t m) const { return positions_[m]; }
    double angle(std::size_t m) const;

    /// Arc-length quadrature weight per detector, R (theta_end - theta_start) / M.
    double weight() const;

    bool is_full_circle() const;

    friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;

private:
    friend SensorGeometry make_arc_geometry(double, std::size_t, double, double);

    double radius_ = 0.0;
    double theta_start_ = 0.0;
    double theta_end_ = 0.0;
    std::vector<Point> positions_;
};

/// Throws InvalidArgument if radius <= 0, count < 2, or the angular interval is
/// empty or longer than a full turn.
SensorGeometry make_arc_geometry(double radius, std::size_t count, double theta_start,
                                 double theta_end);

/// Full circle starting at angle 0.
SensorGeometry make_full_circle(double radius, std::size_t count);

/// The part of the circle |s| = radius below the horizontal line y = y_cut
/// (i.e. s_2 < y_cut). Requires |y_cut| < radius.
SensorGeometry make_lower_arc(double radius, std::size_t count, double y_cut);

/// Detector-major pressure samples: values[m * N + n] = p(s_m, n dt).
class Sinogram {
public:
    Sinogram() = default;
    Sinogram(SensorGeometry geometry, std::size_t samples, double dt);
    Sinogram(SensorGeometry geometry, std::size_t samples, double dt, std::vector<double> values);

    const SensorGeometry& geometry() const { return geometry_; }
    std::size_t detectors() const { return geometry_.size(); }
    std::size_t samples() const { return samples_; }
    double dt() const { return dt_; }
    /// Time of the last sample, (N - 1) dt.
    double t_final() const { return dt_ * static_cast<double>(samples_ - 1); }

    std::span<double> row(std::size_t m) { return {values_.data() + m * samples_, samples_}; }
    std::span<const double> row(std::size_t m) const {
        return {values_.data() + m * samples_, samples_};
    }
    double& at(std::size_t m, std::size_t n) { return values_[m * samples_ + n]; }
    double at(std::size_t m, std::size_t n) const { return values_[m * samples_ + n]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    Sinogram zeros_like() const { return Sinogram(geometry_, samples_, dt_); }

    bool all_finite() const;

private:
    SensorGeometry geometry_;
    std::size_t samples_ = 0;
    double dt_ = 0.0;
    std::vector<double> values_;
};

/// Euclidean inner product over the raw value arrays.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

inline double distance(Point a, Point b) {
    const double ex = a.x - b.x;
    const double ey = a.y - b.y;
    return std::sqrt(ex * ex + ey * ey);
}

}  // namespace pat
