#include "pat/nn/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <string>

#include "pat/parallel.hpp"

namespace pat::nn {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using ColMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
template <class T>
using StridedRows = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <class T>
using ConstStridedRows = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

// im2col buffers are capped at this many elements. The row partition depends
// only on the layer shape, never on the thread count.
constexpr std::size_t kColumnBudget = std::size_t(1) << 20;

struct RowChunks {
    std::size_t rows_per_chunk;
    std::size_t count;
};

RowChunks row_chunks(std::size_t rows, std::size_t width, std::size_t patch) {
    const std::size_t per_row = std::max<std::size_t>(1, width * patch);
    const std::size_t rpc = std::clamp<std::size_t>(kColumnBudget / per_row, 1, rows);
    return {rpc, (rows + rpc - 1) / rpc};
}

// Column j of `col` is the zero-padded k x k x C_in patch of output pixel
// (r0 + j / w, j % w), ordered (channel, a, b) like the kernel rows.
template <class T>
void im2col(const T* x, std::size_t c_in, std::size_t h, std::size_t w, std::size_t k, std::size_t r0,
            std::size_t r1, ColMat<T>& col) {
    const long pad = static_cast<long>(k / 2);
    const long lh = static_cast<long>(h);
    const long lw = static_cast<long>(w);
    for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            T* out = col.data() + ((r - r0) * w + c) * col.rows();
            for (std::size_t ci = 0; ci < c_in; ++ci) {
                const T* plane = x + ci * h * w;
                for (std::size_t a = 0; a < k; ++a) {
                    const long y = static_cast<long>(r + a) - pad;
                    for (std::size_t b = 0; b < k; ++b) {
                        const long xx = static_cast<long>(c + b) - pad;
                        *out++ = (y < 0 || y >= lh || xx < 0 || xx >= lw) ? T(0) : plane[y * lw + xx];
                    }
                }
            }
        }
    }
}

template <class T>
void check_conv(const Tensor<T>& x, const ConvParams<T>& p) {
    if (x.c() != p.c_in) {
        throw InvalidArgument("conv2d: input has " + std::to_string(x.c()) + " channels, kernel expects " +
                              std::to_string(p.c_in));
    }
    if (x.empty()) throw InvalidArgument("conv2d: empty input");
}

}  // namespace

template <class T>
ConvParams<T>::ConvParams(std::size_t c_out_, std::size_t c_in_, std::size_t k_)
    : c_out(c_out_), c_in(c_in_), k(k_), kernel(c_out_ * c_in_ * k_ * k_, T(0)), bias(c_out_, T(0)) {
    if (c_out == 0 || c_in == 0) throw InvalidArgument("conv: channel counts must be positive");
    if (k % 2 == 0) throw InvalidArgument("conv: kernel size must be odd");
}

template <class T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const ConvParams<T>& p) {
    check_conv(x, p);
    const std::size_t h = x.h(), w = x.w();
    const std::size_t patch = p.c_in * p.k * p.k;
    Tensor<T> y(x.n(), p.c_out, h, w);
    const Eigen::Map<const RowMat<T>> K(p.kernel.data(), p.c_out, patch);
    const RowChunks chunks = row_chunks(h, w, patch);
    for (std::size_t i = 0; i < x.n(); ++i) {
        const T* xi = x.channel(i, 0);
        T* yi = y.channel(i, 0);
        parallel_for(chunks.count, [&](std::size_t ch) {
            const std::size_t r0 = ch * chunks.rows_per_chunk;
            const std::size_t r1 = std::min(h, r0 + chunks.rows_per_chunk);
            const std::size_t cols = (r1 - r0) * w;
            ColMat<T> col(patch, cols);
            im2col(xi, p.c_in, h, w, p.k, r0, r1, col);
            StridedRows<T> out(yi + r0 * w, p.c_out, cols, Eigen::OuterStride<>(h * w));
            out.noalias() = K * col;
            for (std::size_t o = 0; o < p.c_out; ++o) out.row(o).array() += p.bias[o];
        });
    }
    return y;
}

template <class T>
void conv2d_backward(const Tensor<T>& x, const ConvParams<T>& p, const Tensor<T>& dy, ConvParams<T>& grad,
                     Tensor<T>* dx) {
    check_conv(x, p);
    if (dy.n() != x.n() || dy.c() != p.c_out || dy.h() != x.h() || dy.w() != x.w()) {
        throw InvalidArgument("conv2d_backward: dy shape mismatch");
    }
    if (grad.c_out != p.c_out || grad.c_in != p.c_in || grad.k != p.k) {
        throw InvalidArgument("conv2d_backward: gradient buffer shape mismatch");
    }
    const std::size_t h = x.h(), w = x.w();
    const std::size_t patch = p.c_in * p.k * p.k;
    const RowChunks chunks = row_chunks(h, w, patch);
    std::vector<RowMat<T>> partial(chunks.count);
    std::vector<std::vector<T>> partial_bias(chunks.count, std::vector<T>(p.c_out, T(0)));
    Eigen::Map<RowMat<T>> dK(grad.kernel.data(), p.c_out, patch);
    for (std::size_t i = 0; i < x.n(); ++i) {
        const T* xi = x.channel(i, 0);
        const T* dyi = dy.channel(i, 0);
        parallel_for(chunks.count, [&](std::size_t ch) {
            const std::size_t r0 = ch * chunks.rows_per_chunk;
            const std::size_t r1 = std::min(h, r0 + chunks.rows_per_chunk);
            const std::size_t cols = (r1 - r0) * w;
            ColMat<T> col(patch, cols);
            im2col(xi, p.c_in, h, w, p.k, r0, r1, col);
            ConstStridedRows<T> g(dyi + r0 * w, p.c_out, cols, Eigen::OuterStride<>(h * w));
            partial[ch].noalias() = g * col.transpose();
            // Plain loop: Eigen's vectorized sum() peels by pointer alignment, so its
            // summation order would vary with where the buffers were allocated.
            for (std::size_t o = 0; o < p.c_out; ++o) {
                const T* row = dyi + o * h * w + r0 * w;
                T s = T(0);
                for (std::size_t j = 0; j < cols; ++j) s += row[j];
                partial_bias[ch][o] = s;
            }
        });
        // Fixed reduction order keeps results independent of the thread count.
        for (std::size_t ch = 0; ch < chunks.count; ++ch) {
            dK += partial[ch];
            for (std::size_t o = 0; o < p.c_out; ++o) grad.bias[o] += partial_bias[ch][o];
        }
    }
    if (dx) {
        ConvParams<T> flipped(p.c_in, p.c_out, p.k);
        for (std::size_t o = 0; o < p.c_out; ++o)
            for (std::size_t ci = 0; ci < p.c_in; ++ci)
                for (std::size_t a = 0; a < p.k; ++a)
                    for (std::size_t b = 0; b < p.k; ++b)
                        flipped.w(ci, o, p.k - 1 - a, p.k - 1 - b) = p.w(o, ci, a, b);
        *dx = conv2d_forward(dy, flipped);
    }
}

template <class T>
Tensor<T> relu_forward(const Tensor<T>& x) {
    Tensor<T> y = x;
    for (T& v : y.values()) v = v > T(0) ? v : T(0);
    return y;
}

template <class T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
    if (!x.same_shape(dy)) throw InvalidArgument("relu_backward: shape mismatch");
    Tensor<T> dx = dy;
    const T* xv = x.data();
    T* d = dx.data();
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (!(xv[i] > T(0))) d[i] = T(0);
    return dx;
}

template <class T>
Tensor<T> maxpool2_forward(const Tensor<T>& x) {
    if (x.h() % 2 != 0 || x.w() % 2 != 0) {
        throw InvalidArgument("maxpool2: spatial size " + std::to_string(x.h()) + "x" + std::to_string(x.w()) +
                              " is not even");
    }
    const std::size_t oh = x.h() / 2, ow = x.w() / 2;
    Tensor<T> y(x.n(), x.c(), oh, ow);
    for (std::size_t i = 0; i < x.n(); ++i)
        for (std::size_t ch = 0; ch < x.c(); ++ch)
            for (std::size_t r = 0; r < oh; ++r)
                for (std::size_t c = 0; c < ow; ++c) {
                    T m = x.at(i, ch, 2 * r, 2 * c);
                    m = std::max(m, x.at(i, ch, 2 * r, 2 * c + 1));
                    m = std::max(m, x.at(i, ch, 2 * r + 1, 2 * c));
                    m = std::max(m, x.at(i, ch, 2 * r + 1, 2 * c + 1));
                    y.at(i, ch, r, c) = m;
                }
    return y;
}

template <class T>
Tensor<T> maxpool2_backward(const Tensor<T>& x, const Tensor<T>& dy) {
    if (x.h() % 2 != 0 || x.w() % 2 != 0) throw InvalidArgument("maxpool2_backward: spatial size is not even");
    if (dy.n() != x.n() || dy.c() != x.c() || dy.h() * 2 != x.h() || dy.w() * 2 != x.w()) {
        throw InvalidArgument("maxpool2_backward: dy shape mismatch");
    }
    Tensor<T> dx(x.n(), x.c(), x.h(), x.w());
    for (std::size_t i = 0; i < x.n(); ++i)
        for (std::size_t ch = 0; ch < x.c(); ++ch)
            for (std::size_t r = 0; r < dy.h(); ++r)
                for (std::size_t c = 0; c < dy.w(); ++c) {
                    std::size_t br = 2 * r, bc = 2 * c;
                    T best = x.at(i, ch, br, bc);
                    for (std::size_t a = 0; a < 2; ++a)
                        for (std::size_t b = 0; b < 2; ++b) {
                            const T v = x.at(i, ch, 2 * r + a, 2 * c + b);
                            if (v > best) {
                                best = v;
                                br = 2 * r + a;
                                bc = 2 * c + b;
                            }
                        }
                    dx.at(i, ch, br, bc) += dy.at(i, ch, r, c);
                }
    return dx;
}

template <class T>
Tensor<T> upsample2_forward(const Tensor<T>& x) {
    Tensor<T> y(x.n(), x.c(), 2 * x.h(), 2 * x.w());
    for (std::size_t i = 0; i < x.n(); ++i)
        for (std::size_t ch = 0; ch < x.c(); ++ch)
            for (std::size_t r = 0; r < y.h(); ++r)
                for (std::size_t c = 0; c < y.w(); ++c) y.at(i, ch, r, c) = x.at(i, ch, r / 2, c / 2);
    return y;
}

template <class T>
Tensor<T> upsample2_backward(const Tensor<T>& dy) {
    if (dy.h() % 2 != 0 || dy.w() % 2 != 0) throw InvalidArgument("upsample2_backward: spatial size is not even");
    Tensor<T> dx(dy.n(), dy.c(), dy.h() / 2, dy.w() / 2);
    for (std::size_t i = 0; i < dy.n(); ++i)
        for (std::size_t ch = 0; ch < dy.c(); ++ch)
            for (std::size_t r = 0; r < dx.h(); ++r)
                for (std::size_t c = 0; c < dx.w(); ++c)
                    dx.at(i, ch, r, c) = dy.at(i, ch, 2 * r, 2 * c) + dy.at(i, ch, 2 * r, 2 * c + 1) +
                                         dy.at(i, ch, 2 * r + 1, 2 * c) + dy.at(i, ch, 2 * r + 1, 2 * c + 1);
    return dx;
}

template <class T>
Tensor<T> concat_forward(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) throw InvalidArgument("concat: shape mismatch");
    Tensor<T> y(a.n(), a.c() + b.c(), a.h(), a.w());
    const std::size_t pa = a.c() * a.plane(), pb = b.c() * b.plane();
    for (std::size_t i = 0; i < a.n(); ++i) {
        std::copy_n(a.channel(i, 0), pa, y.channel(i, 0));
        std::copy_n(b.channel(i, 0), pb, y.channel(i, a.c()));
    }
    return y;
}

template <class T>
std::pair<Tensor<T>, Tensor<T>> concat_backward(const Tensor<T>& dy, std::size_t a_channels) {
    if (a_channels == 0 || a_channels >= dy.c()) throw InvalidArgument("concat_backward: bad split");
    Tensor<T> da(dy.n(), a_channels, dy.h(), dy.w());
    Tensor<T> db(dy.n(), dy.c() - a_channels, dy.h(), dy.w());
    for (std::size_t i = 0; i < dy.n(); ++i) {
        std::copy_n(dy.channel(i, 0), da.c() * dy.plane(), da.channel(i, 0));
        std::copy_n(dy.channel(i, a_channels), db.c() * dy.plane(), db.channel(i, 0));
    }
    return {std::move(da), std::move(db)};
}

#define PAT_INSTANTIATE(T)                                                                                    \
    template struct ConvParams<T>;                                                                             \
    template Tensor<T> conv2d_forward(const Tensor<T>&, const ConvParams<T>&);                                 \
    template void conv2d_backward(const Tensor<T>&, const ConvParams<T>&, const Tensor<T>&, ConvParams<T>&,    \
                                  Tensor<T>*);                                                                 \
    template Tensor<T> relu_forward(const Tensor<T>&);                                                         \
    template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                                      \
    template Tensor<T> maxpool2_forward(const Tensor<T>&);                                                     \
    template Tensor<T> maxpool2_backward(const Tensor<T>&, const Tensor<T>&);                                  \
    template Tensor<T> upsample2_forward(const Tensor<T>&);                                                    \
    template Tensor<T> upsample2_backward(const Tensor<T>&);                                                   \
    template Tensor<T> concat_forward(const Tensor<T>&, const Tensor<T>&);                                     \
    template std::pair<Tensor<T>, Tensor<T>> concat_backward(const Tensor<T>&, std::size_t);

PAT_INSTANTIATE(float)
PAT_INSTANTIATE(double)

#undef PAT_INSTANTIATE

}  // namespace pat::nn
