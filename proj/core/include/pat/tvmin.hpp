#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pat/fbp.hpp"
#include "pat/geometry.hpp"
#include "pat/wave.hpp"

namespace pat {

/// Forward differences (D1 along x / columns, D2 along rows), scaled by the
/// pixel spacing, with zero in the last column / row.
struct ImageGradient {
    GridImage d1;
    GridImage d2;
};

/// Requires at least 2x2 pixels.
ImageGradient grad(const GridImage& image);
/// Transpose of grad(), i.e. minus the discrete divergence.
GridImage neg_div(const ImageGradient& field);

/// Isotropic total variation sum_i sqrt((D1 X)_i^2 + (D2 X)_i^2).
double total_variation(const GridImage& image);

/// Matrix-free linear map with its transpose on flat double arrays.
struct LinearMap {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::function<void(std::span<const double>, std::span<double>)> apply;
    std::function<void(std::span<const double>, std::span<double>)> adjoint;
};

LinearMap wave_map(const WaveOperator& op);
LinearMap gradient_map(const GridImage& grid_template);
/// Stacked map x -> [A x; B x].
LinearMap stack(const LinearMap& top, const LinearMap& bottom);

inline constexpr double kOpNormSafety = 1.05;

/// Power iteration on A^T A from a fixed pseudo-random start; returns
/// 1.05 * sqrt(largest eigenvalue estimate). Requires iters >= 10.
double estimate_opnorm(const LinearMap& map, std::size_t iters);

struct TvConfig {
    double lambda = 0.005;
    std::size_t iterations = 50;
    /// Step sizes; 0 selects 1 / L.
    double sigma = 0.0;
    double tau = 0.0;
    double theta = 1.0;
    /// Norm of [A; grad]; 0 estimates it with opnorm_iters power iterations.
    double opnorm = 0.0;
    std::size_t opnorm_iters = 50;
    bool nonnegative = false;
    /// Objective is recorded every this many iterations (and at 0 and the end).
    std::size_t checkpoint_every = 1;
};

struct TvCheckpoint {
    std::size_t iteration = 0;
    double data_term = 0.0;
    double tv_term = 0.0;
    double total = 0.0;
};

struct TvResult {
    GridImage image;
    std::vector<TvCheckpoint> history;
    double opnorm = 0.0;
    double sigma = 0.0;
    double tau = 0.0;
};

/// 1/2 |A x - y|^2 + lambda TV(x).
TvCheckpoint tv_objective(const WaveOperator& op, const Sinogram& data, const GridImage& image, double lambda);

/// Primal-dual (Chambolle-Pock) iteration for min 1/2 |A x - y|^2 + lambda TV(x),
/// starting from `initial`. Throws InvalidArgument if sigma tau L^2 > 1.
TvResult tv_reconstruct(const WaveOperator& op, const Sinogram& data, const TvConfig& cfg,
                        const GridImage& initial);

/// Same, warm-started from the FBP reconstruction on the operator's grid.
TvResult tv_reconstruct(const WaveOperator& op, const Sinogram& data, const TvConfig& cfg,
                        const FbpConfig& fbp_cfg = {});

}  // namespace pat
