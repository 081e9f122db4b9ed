#include "pat/tvmin.hpp"

#include <algorithm>
#include <cmath>

#include "pat/errors.hpp"
#include "pat/rng.hpp"

namespace pat {

namespace {

GridImage image_from(const GridImage& like, std::span<const double> values) {
    return GridImage(like.width(), like.height(), like.extent(), std::vector<double>(values.begin(), values.end()));
}

Sinogram sinogram_from(const WaveOperator& op, std::span<const double> values) {
    return Sinogram(op.geometry(), op.samples(), op.dt(), std::vector<double>(values.begin(), values.end()));
}

void copy_into(std::span<const double> src, std::span<double> dst) { std::copy(src.begin(), src.end(), dst.begin()); }

}  // namespace

ImageGradient grad(const GridImage& image) {
    const std::size_t w = image.width();
    const std::size_t h = image.height();
    if (w < 2 || h < 2) throw InvalidArgument("grad: image must be at least 2x2");
    ImageGradient g{image.zeros_like(), image.zeros_like()};
    const double inv_dx = 1.0 / image.dx();
    const double inv_dy = 1.0 / image.dy();
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            if (c + 1 < w) g.d1.at(c, r) = (image.at(c + 1, r) - image.at(c, r)) * inv_dx;
            if (r + 1 < h) g.d2.at(c, r) = (image.at(c, r + 1) - image.at(c, r)) * inv_dy;
        }
    }
    return g;
}

GridImage neg_div(const ImageGradient& field) {
    const GridImage& p1 = field.d1;
    const GridImage& p2 = field.d2;
    const std::size_t w = p1.width();
    const std::size_t h = p1.height();
    if (p2.width() != w || p2.height() != h) throw InvalidArgument("neg_div: component shapes differ");
    GridImage out = p1.zeros_like();
    const double inv_dx = 1.0 / p1.dx();
    const double inv_dy = 1.0 / p1.dy();
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            double v = 0.0;
            if (c + 1 < w) v -= p1.at(c, r);
            if (c >= 1) v += p1.at(c - 1, r);
            double u = 0.0;
            if (r + 1 < h) u -= p2.at(c, r);
            if (r >= 1) u += p2.at(c, r - 1);
            out.at(c, r) = v * inv_dx + u * inv_dy;
        }
    }
    return out;
}

double total_variation(const GridImage& image) {
    const ImageGradient g = grad(image);
    double tv = 0.0;
    const auto a = g.d1.values();
    const auto b = g.d2.values();
    for (std::size_t i = 0; i < a.size(); ++i) tv += std::sqrt(a[i] * a[i] + b[i] * b[i]);
    return tv;
}

LinearMap wave_map(const WaveOperator& op) {
    LinearMap map;
    map.in_dim = op.grid_template().size();
    map.out_dim = op.geometry().size() * op.samples();
    map.apply = [&op](std::span<const double> x, std::span<double> y) {
        copy_into(op.forward(image_from(op.grid_template(), x)).values(), y);
    };
    map.adjoint = [&op](std::span<const double> y, std::span<double> x) {
        copy_into(op.adjoint(sinogram_from(op, y)).values(), x);
    };
    return map;
}

LinearMap gradient_map(const GridImage& grid_template) {
    const GridImage like = grid_template.zeros_like();
    const std::size_t n = like.size();
    LinearMap map;
    map.in_dim = n;
    map.out_dim = 2 * n;
    map.apply = [like, n](std::span<const double> x, std::span<double> y) {
        const ImageGradient g = grad(image_from(like, x));
        copy_into(g.d1.values(), y.first(n));
        copy_into(g.d2.values(), y.subspan(n));
    };
    map.adjoint = [like, n](std::span<const double> y, std::span<double> x) {
        copy_into(neg_div({image_from(like, y.first(n)), image_from(like, y.subspan(n))}).values(), x);
    };
    return map;
}

LinearMap stack(const LinearMap& top, const LinearMap& bottom) {
    if (top.in_dim != bottom.in_dim) throw InvalidArgument("stack: input dimensions differ");
    LinearMap map;
    map.in_dim = top.in_dim;
    map.out_dim = top.out_dim + bottom.out_dim;
    const std::size_t split = top.out_dim;
    map.apply = [top, bottom, split](std::span<const double> x, std::span<double> y) {
        top.apply(x, y.first(split));
        bottom.apply(x, y.subspan(split));
    };
    map.adjoint = [top, bottom, split](std::span<const double> y, std::span<double> x) {
        std::vector<double> tmp(x.size());
        top.adjoint(y.first(split), x);
        bottom.adjoint(y.subspan(split), tmp);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += tmp[i];
    };
    return map;
}

double estimate_opnorm(const LinearMap& map, std::size_t iters) {
    if (iters < 10) throw InvalidArgument("estimate_opnorm: need at least 10 iterations");
    std::vector<double> x(map.in_dim), y(map.out_dim), z(map.in_dim);
    Rng rng(Seed{0x6f706e6f726dULL});
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    double n = std::sqrt(dot(x, x));
    for (auto& v : x) v /= n;
    double eigen = 0.0;
    for (std::size_t k = 0; k < iters; ++k) {
        map.apply(x, y);
        map.adjoint(y, z);
        eigen = dot(x, z);  // Rayleigh quotient, |x| = 1
        n = std::sqrt(dot(z, z));
        if (!(n > 0.0)) return 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = z[i] / n;
    }
    return kOpNormSafety * std::sqrt(std::max(eigen, 0.0));
}

TvCheckpoint tv_objective(const WaveOperator& op, const Sinogram& data, const GridImage& image, double lambda) {
    const Sinogram ax = op.forward(image);
    double data_term = 0.0;
    const auto a = ax.values();
    const auto y = data.values();
    for (std::size_t i = 0; i < a.size(); ++i) data_term += (a[i] - y[i]) * (a[i] - y[i]);
    TvCheckpoint c;
    c.data_term = 0.5 * data_term;
    c.tv_term = lambda * total_variation(image);
    c.total = c.data_term + c.tv_term;
    return c;
}

TvResult tv_reconstruct(const WaveOperator& op, const Sinogram& data, const TvConfig& cfg, const GridImage& initial) {
    if (cfg.iterations < 1) throw InvalidArgument("tv: iterations must be >= 1");
    if (!(cfg.lambda >= 0.0)) throw InvalidArgument("tv: lambda must be >= 0");
    if (!(cfg.theta >= 0.0 && cfg.theta <= 1.0)) throw InvalidArgument("tv: theta must lie in [0, 1]");
    if (cfg.sigma < 0.0 || cfg.tau < 0.0) throw InvalidArgument("tv: step sizes must be positive");
    if (data.samples() != op.samples() || !(data.geometry() == op.geometry())) {
        throw InvalidArgument("tv: data do not match the forward operator");
    }
    const GridImage& like = op.grid_template();
    if (initial.width() != like.width() || initial.height() != like.height() || !(initial.extent() == like.extent())) {
        throw InvalidArgument("tv: initial image does not match the operator grid");
    }

    TvResult result;
    result.opnorm = cfg.opnorm > 0.0 ? cfg.opnorm
                                     : estimate_opnorm(stack(wave_map(op), gradient_map(like)), cfg.opnorm_iters);
    const double L = result.opnorm;
    result.sigma = cfg.sigma > 0.0 ? cfg.sigma : 1.0 / L;
    result.tau = cfg.tau > 0.0 ? cfg.tau : 1.0 / L;
    const double sigma = result.sigma;
    const double tau = result.tau;
    if (sigma * tau * L * L > 1.0 + 1e-12) {
        throw InvalidArgument("tv: step sizes violate sigma * tau * L^2 <= 1");
    }

    const std::size_t pixels = like.size();
    GridImage x = initial;
    GridImage x_bar = initial;
    Sinogram ax = op.forward(x);
    Sinogram ax_bar = ax;
    std::vector<double> q(data.values().size(), 0.0);
    ImageGradient p{like.zeros_like(), like.zeros_like()};

    auto record = [&](std::size_t iter) {
        TvCheckpoint c;
        c.iteration = iter;
        double r2 = 0.0;
        const auto a = ax.values();
        const auto y = data.values();
        for (std::size_t i = 0; i < a.size(); ++i) r2 += (a[i] - y[i]) * (a[i] - y[i]);
        c.data_term = 0.5 * r2;
        c.tv_term = cfg.lambda * total_variation(x);
        c.total = c.data_term + c.tv_term;
        if (!std::isfinite(c.total)) throw NumericalError("tv: objective became non-finite at iteration " + std::to_string(iter));
        result.history.push_back(c);
    };
    record(0);
    const std::size_t every = std::max<std::size_t>(1, cfg.checkpoint_every);

    for (std::size_t k = 1; k <= cfg.iterations; ++k) {
        // Data dual: prox of the conjugate of 1/2 |. - y|^2.
        {
            const auto a = ax_bar.values();
            const auto y = data.values();
            for (std::size_t i = 0; i < q.size(); ++i) q[i] = (q[i] + sigma * (a[i] - y[i])) / (1.0 + sigma);
        }
        // TV dual: pointwise projection onto the lambda-ball.
        {
            const ImageGradient g = grad(x_bar);
            auto p1 = p.d1.values();
            auto p2 = p.d2.values();
            const auto g1 = g.d1.values();
            const auto g2 = g.d2.values();
            for (std::size_t i = 0; i < pixels; ++i) {
                const double u = p1[i] + sigma * g1[i];
                const double v = p2[i] + sigma * g2[i];
                const double norm = std::sqrt(u * u + v * v);
                const double shrink = norm > cfg.lambda ? cfg.lambda / norm : 1.0;
                p1[i] = u * shrink;
                p2[i] = v * shrink;
            }
        }
        const GridImage back = op.adjoint(Sinogram(op.geometry(), op.samples(), op.dt(), q));
        const GridImage div = neg_div(p);
        GridImage x_new = x;
        {
            auto xn = x_new.values();
            const auto b = back.values();
            const auto d = div.values();
            for (std::size_t i = 0; i < pixels; ++i) {
                xn[i] -= tau * (b[i] + d[i]);
                if (cfg.nonnegative && xn[i] < 0.0) xn[i] = 0.0;
            }
        }
        const Sinogram ax_new = op.forward(x_new);
        {
            auto xb = x_bar.values();
            const auto xn = x_new.values();
            const auto xo = x.values();
            for (std::size_t i = 0; i < pixels; ++i) xb[i] = xn[i] + cfg.theta * (xn[i] - xo[i]);
            auto ab = ax_bar.values();
            const auto an = ax_new.values();
            const auto ao = ax.values();
            for (std::size_t i = 0; i < ab.size(); ++i) ab[i] = an[i] + cfg.theta * (an[i] - ao[i]);
        }
        x = std::move(x_new);
        ax = ax_new;
        if (k % every == 0 || k == cfg.iterations) record(k);
    }
    result.image = std::move(x);
    return result;
}

TvResult tv_reconstruct(const WaveOperator& op, const Sinogram& data, const TvConfig& cfg, const FbpConfig& fbp_cfg) {
    const GridImage init = fbp_reconstruct(data, op.grid_template(), fbp_cfg);
    return tv_reconstruct(op, data, cfg, init);
}

}  // namespace pat
