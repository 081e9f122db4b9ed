#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pat/errors.hpp"
#include "pat/geometry.hpp"

namespace pat::nn {

/// Dense (batch, channels, height, width) array, row-major in that order.
template <class T>
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, T fill = T(0))
        : n_(n), c_(c), h_(h), w_(w), data_(n * c * h * w, fill) {}

    std::size_t n() const { return n_; }
    std::size_t c() const { return c_; }
    std::size_t h() const { return h_; }
    std::size_t w() const { return w_; }
    std::size_t plane() const { return h_ * w_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T* channel(std::size_t i, std::size_t ch) { return data_.data() + (i * c_ + ch) * plane(); }
    const T* channel(std::size_t i, std::size_t ch) const { return data_.data() + (i * c_ + ch) * plane(); }
    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    T& at(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) {
        return data_[((i * c_ + ch) * h_ + y) * w_ + x];
    }
    T at(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) const {
        return data_[((i * c_ + ch) * h_ + y) * w_ + x];
    }

    bool same_shape(const Tensor& o) const { return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }
    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    Tensor& operator+=(const Tensor& o) {
        if (!same_shape(o)) throw InvalidArgument("tensor +=: shape mismatch");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

private:
    std::size_t n_ = 0, c_ = 0, h_ = 0, w_ = 0;
    std::vector<T> data_;
};

/// (1, 1, height, width) tensor holding the image rows top to bottom.
template <class T>
Tensor<T> to_tensor(const GridImage& image) {
    Tensor<T> t(1, 1, image.height(), image.width());
    const auto v = image.values();
    for (std::size_t i = 0; i < v.size(); ++i) t.data()[i] = static_cast<T>(v[i]);
    return t;
}

/// Inverse of to_tensor for a single-channel, single-sample tensor.
template <class T>
GridImage to_image(const Tensor<T>& t, const GridImage& grid_template) {
    if (t.n() != 1 || t.c() != 1 || t.h() != grid_template.height() || t.w() != grid_template.width()) {
        throw InvalidArgument("to_image: tensor shape does not match the grid");
    }
    std::vector<double> v(t.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(t.data()[i]);
    return GridImage(t.w(), t.h(), grid_template.extent(), std::move(v));
}

}  // namespace pat::nn
