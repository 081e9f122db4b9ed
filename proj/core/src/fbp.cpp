#include "pat/fbp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "difference.hpp"
#include "pat/errors.hpp"
#include "pat/parallel.hpp"
#include "pat/wave.hpp"

namespace pat {

Sinogram time_derivative(const Sinogram& sino) {
    if (sino.samples() < 3) throw InvalidArgument("time_derivative: need N >= 3 samples");
    Sinogram out = sino.zeros_like();
    for (std::size_t m = 0; m < sino.detectors(); ++m) detail::differentiate(sino.row(m), sino.dt(), out.row(m));
    return out;
}

FbpOperator::FbpOperator(const GridImage& grid_template, SensorGeometry geometry, std::size_t samples, double dt,
                         FbpConfig cfg)
    : template_(grid_template.zeros_like()), geometry_(std::move(geometry)), samples_(samples), dt_(dt), cfg_(std::move(cfg)) {
    if (cfg_.inner_rule != "cosh-linear") throw InvalidArgument("fbp: unknown inner quadrature rule '" + cfg_.inner_rule + "'");
    if (samples_ < 3) throw InvalidArgument("fbp: need N >= 3 samples");
    if (!(dt_ > 0.0)) throw InvalidArgument("fbp: dt must be positive");
    const double record_end = dt_ * static_cast<double>(samples_ - 1);
    if (!(cfg_.t_end >= 0.0)) throw InvalidArgument("fbp: t_end must be >= 0");
    if (cfg_.t_end > record_end * (1.0 + 1e-12)) {
        throw InvalidArgument("fbp: t_end exceeds the sinogram record (N-1) dt");
    }
    const double t_end = cfg_.t_end > 0.0 ? cfg_.t_end : record_end;
    last_sample_ = std::min(samples_ - 1, static_cast<std::size_t>(std::floor(t_end / dt_ + 1e-9)));
    if (last_sample_ < 2) throw InvalidArgument("fbp: t_end leaves fewer than 3 samples");

    const Extent& extent = template_.extent();
    double d_lo = std::numeric_limits<double>::infinity();
    double d_hi = 0.0;
    for (const Point& s : geometry_.positions()) {
        d_lo = std::min(d_lo, min_distance(s, extent));
        d_hi = std::max(d_hi, max_distance(s, extent));
        if (max_distance(s, extent) > t_end) covers_ = false;
    }
    first_j_ = static_cast<std::size_t>(std::floor(d_lo / dt_));
    last_j_ = std::min(last_sample_, static_cast<std::size_t>(std::ceil(d_hi / dt_)) + 1);
    first_j_ = std::min(first_j_, last_j_);

    // In units of dt the inner integral over cell [a, a+1], a >= j, of a
    // piecewise-linear integrand P is
    //   P_a (b K0 - K1) + P_b (K1 - a K0),
    //   K0 = acosh(b/j) - acosh(a/j),  K1 = sqrt(b^2 - j^2) - sqrt(a^2 - j^2).
    // Row j = 0 (a detector sitting on a pixel) reuses row 1.
    const std::size_t rows = last_j_ - first_j_ + 1;
    offsets_.resize(rows);
    std::size_t total = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        offsets_[r] = total;
        const std::size_t j = first_j_ + r;
        total += last_sample_ >= j ? last_sample_ - j + 1 : 0;
    }
    table_.assign(total + 2, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t j = first_j_ + r;
        if (j > last_sample_) continue;
        const double d = static_cast<double>(std::max<std::size_t>(j, 1));
        double* coef = table_.data() + offsets_[r];
        const std::size_t start = std::max<std::size_t>(j, 1);
        double acosh_a = std::acosh(static_cast<double>(start) / d);
        double root_a = std::sqrt(std::max(0.0, static_cast<double>(start) * start - d * d));
        for (std::size_t n = start; n < last_sample_; ++n) {
            const double a = static_cast<double>(n);
            const double b = a + 1.0;
            const double acosh_b = std::acosh(b / d);
            const double root_b = std::sqrt((b - d) * (b + d));
            const double k0 = acosh_b - acosh_a;
            const double k1 = root_b - root_a;
            coef[n - j] += b * k0 - k1;
            coef[n + 1 - j] += k1 - a * k0;
            acosh_a = acosh_b;
            root_a = root_b;
        }
    }
}

GridImage FbpOperator::apply(const Sinogram& sino) const {
    if (sino.samples() != samples_ || sino.dt() != dt_ || !(sino.geometry() == geometry_)) {
        throw InvalidArgument("fbp: sinogram does not match the operator's geometry/time axis");
    }
    const std::size_t used = last_sample_ + 1;
    const std::size_t rows = last_j_ - first_j_ + 1;
    std::vector<std::vector<double>> filtered(geometry_.size());

    parallel_for(geometry_.size(), [&](std::size_t m) {
        std::vector<double> deriv(used);
        detail::differentiate(sino.row(m).first(used), dt_, deriv);
        for (std::size_t n = 0; n < used; ++n) deriv[n] *= static_cast<double>(n) * dt_;
        std::vector<double>& f = filtered[m];
        f.assign(rows + 1, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t j = first_j_ + r;
            if (j >= last_sample_) continue;
            const double* coef = row(j);
            double acc = 0.0;
            for (std::size_t n = j; n <= last_sample_; ++n) acc += coef[n - j] * deriv[n];
            f[r] = acc;
        }
    });

    GridImage out = template_.zeros_like();
    auto dst = out.values();
    const double scale = -geometry_.weight() / (std::numbers::pi * geometry_.radius());
    const double inv_dt = 1.0 / dt_;
    parallel_for(template_.height(), [&](std::size_t row_index) {
        for (std::size_t col = 0; col < template_.width(); ++col) {
            const Point r = template_.center_of(col, row_index);
            double sum = 0.0;
            for (std::size_t m = 0; m < geometry_.size(); ++m) {
                const double u = distance(r, geometry_.position(m)) * inv_dt;
                if (u >= static_cast<double>(last_sample_)) continue;
                const double fl = std::floor(u);
                const auto j = static_cast<std::size_t>(fl);
                const double frac = u - fl;
                const std::size_t k = j - first_j_;
                const auto& f = filtered[m];
                sum += (1.0 - frac) * f[k] + frac * f[k + 1];
            }
            dst[row_index * template_.width() + col] = scale * sum;
        }
    });
    return out;
}

GridImage fbp_reconstruct(const Sinogram& sino, const GridImage& grid_template, const FbpConfig& cfg) {
    return FbpOperator(grid_template, sino.geometry(), sino.samples(), sino.dt(), cfg).apply(sino);
}

}  // namespace pat
