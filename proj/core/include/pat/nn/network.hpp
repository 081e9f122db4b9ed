#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pat/nn/layers.hpp"
#include "pat/rng.hpp"

namespace pat::nn {

enum class ArchKind { SNet, UNet };

struct Architecture {
    ArchKind kind = ArchKind::SNet;
    /// U-Net only: number of pooling scales and channels at the finest scale.
    std::size_t depth = 3;
    std::size_t base_channels = 32;
    bool residual = false;

    static Architecture snet(bool residual = false) { return {ArchKind::SNet, 0, 0, residual}; }
    static Architecture unet(std::size_t depth = 3, std::size_t base = 32, bool residual = true) {
        return {ArchKind::UNet, depth, base, residual};
    }

    /// "snet" or "unet-d<depth>-b<base>", with "+res" when residual.
    std::string tag() const;
    static Architecture from_tag(const std::string& tag);

    friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct LayerShape {
    std::size_t c_out, c_in, k;
};

/// S-Net: 1->64->32->1 with 7x7 kernels.
/// U-Net: per encoder scale two 3x3 convs, then a two-conv bottleneck, per
/// decoder scale two 3x3 convs on [upsampled; skip], then a 1x1 conv to one
/// channel. Layer order: encoder, bottleneck, decoder (coarse to fine), final.
std::vector<LayerShape> layer_shapes(const Architecture& arch);

template <class T>
struct Network {
    Architecture arch;
    std::vector<ConvParams<T>> layers;

    std::size_t param_count() const;
    void set_zero();
    /// Flat view helpers over all kernels then biases, layer by layer.
    std::vector<T> flatten() const;
    void unflatten(std::span<const T> flat);
};

/// All weights zero.
template <class T>
Network<T> make_network(const Architecture& arch);

/// Glorot-uniform kernels (fan_in = C_in k^2, fan_out = C_out k^2), zero biases.
template <class T>
Network<T> init_network(const Architecture& arch, Seed seed);

/// Same network in another precision.
template <class To, class From>
Network<To> convert(const Network<From>& net) {
    Network<To> out;
    out.arch = net.arch;
    for (const auto& l : net.layers) {
        ConvParams<To> p(l.c_out, l.c_in, l.k);
        for (std::size_t i = 0; i < l.kernel.size(); ++i) p.kernel[i] = static_cast<To>(l.kernel[i]);
        for (std::size_t i = 0; i < l.bias.size(); ++i) p.bias[i] = static_cast<To>(l.bias[i]);
        out.layers.push_back(std::move(p));
    }
    return out;
}

/// Activations kept by forward_train() for backward().
template <class T>
struct Tape {
    Tensor<T> input;
    std::vector<Tensor<T>> conv_in;
    std::vector<Tensor<T>> conv_out;
};

/// Throws InvalidArgument on a non-single-channel input, on layer shapes
/// that do not match the architecture, or (U-Net) on sizes not divisible by
/// 2^depth.
template <class T>
Tensor<T> forward(const Network<T>& net, const Tensor<T>& x);
template <class T>
Tensor<T> forward_train(const Network<T>& net, const Tensor<T>& x, Tape<T>& tape);

/// Accumulates parameter gradients into `grad` (shaped like net); writes
/// dL/dx into dx when given.
template <class T>
void backward(const Network<T>& net, const Tape<T>& tape, const Tensor<T>& dy, Network<T>& grad,
              Tensor<T>* dx = nullptr);

/// Mean absolute error over all entries; dy receives its (sub)gradient, with
/// sign(0) = 0.
template <class T>
T l1_loss(const Tensor<T>& prediction, const Tensor<T>& target, Tensor<T>* dy = nullptr);

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// PATW: "PATW", u32 version, architecture tag (u32 length + bytes), u32
/// layer count, per layer u32 C_out, C_in, k, k then f64 kernel and bias
/// values, then a CRC-32 (zlib polynomial) of all preceding bytes.
template <class T>
std::vector<std::uint8_t> encode_params(const Network<T>& net);
template <class T>
Network<T> decode_params(std::span<const std::uint8_t> bytes);

template <class T>
void save_params(const std::filesystem::path& path, const Network<T>& net);
template <class T>
Network<T> load_params(const std::filesystem::path& path);

}  // namespace pat::nn
