#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "pat/nn/tensor.hpp"

namespace pat::nn {

/// Kernel (C_out, C_in, k, k) and bias (C_out). k is odd.
template <class T>
struct ConvParams {
    std::size_t c_out = 0;
    std::size_t c_in = 0;
    std::size_t k = 0;
    std::vector<T> kernel;
    std::vector<T> bias;

    ConvParams() = default;
    ConvParams(std::size_t c_out_, std::size_t c_in_, std::size_t k_);

    std::size_t param_count() const { return kernel.size() + bias.size(); }
    T& w(std::size_t o, std::size_t i, std::size_t a, std::size_t b) { return kernel[((o * c_in + i) * k + a) * k + b]; }
    T w(std::size_t o, std::size_t i, std::size_t a, std::size_t b) const {
        return kernel[((o * c_in + i) * k + a) * k + b];
    }
};

/// Cross-correlation with zero padding (k-1)/2, so the spatial size is kept:
///   y[o](r, c) = b[o] + sum_{i,a,b} K[o,i,a,b] x[i](r + a - p, c + b - p).
template <class T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const ConvParams<T>& p);

/// Accumulates dL/dK and dL/db into `grad` (same shape as p). When dx is not
/// null it receives dL/dx, computed as the same-padded correlation of dy with
/// the flipped, channel-transposed kernel.
template <class T>
void conv2d_backward(const Tensor<T>& x, const ConvParams<T>& p, const Tensor<T>& dy, ConvParams<T>& grad,
                     Tensor<T>* dx);

template <class T>
Tensor<T> relu_forward(const Tensor<T>& x);
/// Passes dy where x > 0; zero elsewhere, including x == 0.
template <class T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy);

/// 2x2 max pooling, stride 2. Odd spatial sizes are rejected.
template <class T>
Tensor<T> maxpool2_forward(const Tensor<T>& x);
/// Routes each dy entry to the first maximum of its window in row-major scan order.
template <class T>
Tensor<T> maxpool2_backward(const Tensor<T>& x, const Tensor<T>& dy);

/// Nearest-neighbour 2x upsampling; backward sums each 2x2 block.
template <class T>
Tensor<T> upsample2_forward(const Tensor<T>& x);
template <class T>
Tensor<T> upsample2_backward(const Tensor<T>& dy);

/// Channel concatenation [a; b]; backward splits after a's channels.
template <class T>
Tensor<T> concat_forward(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
std::pair<Tensor<T>, Tensor<T>> concat_backward(const Tensor<T>& dy, std::size_t a_channels);

}  // namespace pat::nn
