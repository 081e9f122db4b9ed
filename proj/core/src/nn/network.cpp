#include "pat/nn/network.hpp"

#include <zlib.h>

#include <cmath>
#include <regex>
#include <string>

#include "pat/io.hpp"

namespace pat::nn {

namespace {

constexpr char kMagic[4] = {'P', 'A', 'T', 'W'};

template <class T>
void check_layers(const Network<T>& net) {
    const auto shapes = layer_shapes(net.arch);
    if (shapes.size() != net.layers.size()) {
        throw InvalidArgument(net.arch.tag() + ": expected " + std::to_string(shapes.size()) + " layers, got " +
                              std::to_string(net.layers.size()));
    }
    for (std::size_t l = 0; l < shapes.size(); ++l) {
        const auto& p = net.layers[l];
        const auto& s = shapes[l];
        if (p.c_out != s.c_out || p.c_in != s.c_in || p.k != s.k ||
            p.kernel.size() != s.c_out * s.c_in * s.k * s.k || p.bias.size() != s.c_out) {
            throw InvalidArgument(net.arch.tag() + ": layer " + std::to_string(l) + " has the wrong shape");
        }
    }
}

template <class T>
void check_input(const Network<T>& net, const Tensor<T>& x) {
    if (x.c() != 1 || x.n() == 0 || x.h() == 0 || x.w() == 0) {
        throw InvalidArgument("network input must be a non-empty single-channel tensor");
    }
    if (net.arch.kind == ArchKind::UNet) {
        const std::size_t div = std::size_t(1) << net.arch.depth;
        if (x.h() % div != 0 || x.w() % div != 0) {
            throw InvalidArgument("U-Net of depth " + std::to_string(net.arch.depth) + " needs sizes divisible by " +
                                  std::to_string(div) + ", got " + std::to_string(x.h()) + "x" +
                                  std::to_string(x.w()));
        }
    }
}

// One conv layer, optionally followed by ReLU, optionally recorded.
template <class T>
Tensor<T> conv(const Network<T>& net, std::size_t l, Tensor<T> x, bool relu, Tape<T>* tape) {
    Tensor<T> z = conv2d_forward(x, net.layers[l]);
    if (tape) {
        tape->conv_in[l] = std::move(x);
        tape->conv_out[l] = z;
    }
    return relu ? relu_forward(z) : z;
}

template <class T>
Tensor<T> run(const Network<T>& net, const Tensor<T>& x, Tape<T>* tape) {
    check_layers(net);
    check_input(net, x);
    if (tape) {
        tape->input = x;
        tape->conv_in.assign(net.layers.size(), {});
        tape->conv_out.assign(net.layers.size(), {});
    }
    Tensor<T> out;
    if (net.arch.kind == ArchKind::SNet) {
        Tensor<T> h = conv(net, 0, x, true, tape);
        h = conv(net, 1, std::move(h), true, tape);
        out = conv(net, 2, std::move(h), false, tape);
    } else {
        const std::size_t D = net.arch.depth;
        std::vector<Tensor<T>> skips(D);
        Tensor<T> h = x;
        std::size_t l = 0;
        for (std::size_t s = 0; s < D; ++s) {
            h = conv(net, l++, std::move(h), true, tape);
            h = conv(net, l++, std::move(h), true, tape);
            skips[s] = h;
            h = maxpool2_forward(h);
        }
        h = conv(net, l++, std::move(h), true, tape);
        h = conv(net, l++, std::move(h), true, tape);
        for (std::size_t s = D; s-- > 0;) {
            h = concat_forward(upsample2_forward(h), skips[s]);
            h = conv(net, l++, std::move(h), true, tape);
            h = conv(net, l++, std::move(h), true, tape);
        }
        out = conv(net, l, std::move(h), false, tape);
    }
    if (net.arch.residual) out += x;
    return out;
}

// Gradient through layer l (and its ReLU when relu is set) given dL/d(output).
template <class T>
Tensor<T> back_conv(const Network<T>& net, const Tape<T>& tape, std::size_t l, const Tensor<T>& d_out, bool relu,
                    Network<T>& grad, bool need_dx) {
    const Tensor<T> dz = relu ? relu_backward(tape.conv_out[l], d_out) : d_out;
    Tensor<T> dx;
    conv2d_backward(tape.conv_in[l], net.layers[l], dz, grad.layers[l], need_dx ? &dx : nullptr);
    return dx;
}

}  // namespace

std::string Architecture::tag() const {
    std::string t = kind == ArchKind::SNet
                        ? std::string("snet")
                        : "unet-d" + std::to_string(depth) + "-b" + std::to_string(base_channels);
    if (residual) t += "+res";
    return t;
}

Architecture Architecture::from_tag(const std::string& tag) {
    static const std::regex re(R"(^(snet|unet-d([0-9]+)-b([0-9]+))(\+res)?$)");
    std::smatch m;
    if (!std::regex_match(tag, m, re)) throw InvalidArgument("unknown architecture tag '" + tag + "'");
    const bool residual = m[4].matched;
    if (m[1] == "snet") return snet(residual);
    return unet(std::stoul(m[2]), std::stoul(m[3]), residual);
}

std::vector<LayerShape> layer_shapes(const Architecture& arch) {
    if (arch.kind == ArchKind::SNet) return {{64, 1, 7}, {32, 64, 7}, {1, 32, 7}};
    if (arch.depth < 1 || arch.depth > 8) throw InvalidArgument("U-Net depth must be in [1, 8]");
    if (arch.base_channels < 1) throw InvalidArgument("U-Net base channel count must be positive");
    const std::size_t D = arch.depth;
    auto ch = [&](std::size_t s) { return arch.base_channels << s; };
    std::vector<LayerShape> shapes;
    std::size_t prev = 1;
    for (std::size_t s = 0; s < D; ++s) {
        shapes.push_back({ch(s), prev, 3});
        shapes.push_back({ch(s), ch(s), 3});
        prev = ch(s);
    }
    shapes.push_back({ch(D), prev, 3});
    shapes.push_back({ch(D), ch(D), 3});
    prev = ch(D);
    for (std::size_t s = D; s-- > 0;) {
        shapes.push_back({ch(s), prev + ch(s), 3});
        shapes.push_back({ch(s), ch(s), 3});
        prev = ch(s);
    }
    shapes.push_back({1, prev, 1});
    return shapes;
}

template <class T>
std::size_t Network<T>::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.param_count();
    return n;
}

template <class T>
void Network<T>::set_zero() {
    for (auto& l : layers) {
        std::fill(l.kernel.begin(), l.kernel.end(), T(0));
        std::fill(l.bias.begin(), l.bias.end(), T(0));
    }
}

template <class T>
std::vector<T> Network<T>::flatten() const {
    std::vector<T> flat;
    flat.reserve(param_count());
    for (const auto& l : layers) {
        flat.insert(flat.end(), l.kernel.begin(), l.kernel.end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

template <class T>
void Network<T>::unflatten(std::span<const T> flat) {
    if (flat.size() != param_count()) throw InvalidArgument("unflatten: size mismatch");
    std::size_t pos = 0;
    for (auto& l : layers) {
        std::copy_n(flat.begin() + pos, l.kernel.size(), l.kernel.begin());
        pos += l.kernel.size();
        std::copy_n(flat.begin() + pos, l.bias.size(), l.bias.begin());
        pos += l.bias.size();
    }
}

template <class T>
Network<T> make_network(const Architecture& arch) {
    Network<T> net;
    net.arch = arch;
    for (const auto& s : layer_shapes(arch)) net.layers.emplace_back(s.c_out, s.c_in, s.k);
    return net;
}

template <class T>
Network<T> init_network(const Architecture& arch, Seed seed) {
    Network<T> net = make_network<T>(arch);
    Rng rng(seed);
    for (auto& l : net.layers) {
        const double fan_in = static_cast<double>(l.c_in * l.k * l.k);
        const double fan_out = static_cast<double>(l.c_out * l.k * l.k);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (T& w : l.kernel) w = static_cast<T>(rng.uniform(-limit, limit));
    }
    return net;
}

template <class T>
Tensor<T> forward(const Network<T>& net, const Tensor<T>& x) {
    return run<T>(net, x, nullptr);
}

template <class T>
Tensor<T> forward_train(const Network<T>& net, const Tensor<T>& x, Tape<T>& tape) {
    return run<T>(net, x, &tape);
}

template <class T>
void backward(const Network<T>& net, const Tape<T>& tape, const Tensor<T>& dy, Network<T>& grad, Tensor<T>* dx) {
    check_layers(net);
    check_layers(grad);
    if (tape.conv_in.size() != net.layers.size()) throw InvalidArgument("backward: tape does not match network");
    const bool need_dx = dx != nullptr;
    const std::size_t last = net.layers.size() - 1;
    Tensor<T> d = back_conv(net, tape, last, dy, false, grad, true);
    if (net.arch.kind == ArchKind::SNet) {
        d = back_conv(net, tape, 1, d, true, grad, true);
        d = back_conv(net, tape, 0, d, true, grad, need_dx);
    } else {
        const std::size_t D = net.arch.depth;
        std::vector<Tensor<T>> d_skip(D);
        std::size_t l = last;
        for (std::size_t s = 0; s < D; ++s) {
            d = back_conv(net, tape, --l, d, true, grad, true);
            const Tensor<T> dc = back_conv(net, tape, --l, d, true, grad, true);
            auto [d_up, ds] = concat_backward(dc, net.layers[l].c_in - net.layers[l].c_out);
            d_skip[s] = std::move(ds);
            d = upsample2_backward(d_up);
        }
        d = back_conv(net, tape, --l, d, true, grad, true);
        d = back_conv(net, tape, --l, d, true, grad, true);
        for (std::size_t s = D; s-- > 0;) {
            // Encoder scale s: its pooled output received d; its pre-pool
            // activation also feeds the decoder through the skip.
            const std::size_t second = 2 * s + 1;
            Tensor<T> h = maxpool2_backward(relu_forward(tape.conv_out[second]), d);
            h += d_skip[s];
            d = back_conv(net, tape, second, h, true, grad, true);
            d = back_conv(net, tape, second - 1, d, true, grad, need_dx || s > 0);
        }
    }
    if (dx) {
        if (net.arch.residual) d += dy;
        *dx = std::move(d);
    }
}

template <class T>
T l1_loss(const Tensor<T>& prediction, const Tensor<T>& target, Tensor<T>* dy) {
    if (!prediction.same_shape(target)) throw InvalidArgument("l1_loss: shape mismatch");
    if (prediction.empty()) throw InvalidArgument("l1_loss: empty tensors");
    const T inv = T(1) / static_cast<T>(prediction.size());
    if (dy) *dy = Tensor<T>(prediction.n(), prediction.c(), prediction.h(), prediction.w());
    double sum = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const T r = prediction.data()[i] - target.data()[i];
        sum += std::abs(static_cast<double>(r));
        if (dy) dy->data()[i] = r > T(0) ? inv : (r < T(0) ? -inv : T(0));
    }
    return static_cast<T>(sum / static_cast<double>(prediction.size()));
}

template <class T>
std::vector<std::uint8_t> encode_params(const Network<T>& net) {
    check_layers(net);
    bytes::Writer w;
    w.raw({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
    w.u32(kCheckpointVersion);
    w.str(net.arch.tag());
    w.u32(static_cast<std::uint32_t>(net.layers.size()));
    for (const auto& l : net.layers) {
        w.u32(static_cast<std::uint32_t>(l.c_out));
        w.u32(static_cast<std::uint32_t>(l.c_in));
        w.u32(static_cast<std::uint32_t>(l.k));
        w.u32(static_cast<std::uint32_t>(l.k));
        for (T v : l.kernel) w.f64(static_cast<double>(v));
        for (T v : l.bias) w.f64(static_cast<double>(v));
    }
    const auto& buf = w.buffer();
    w.u32(static_cast<std::uint32_t>(crc32(0L, buf.data(), static_cast<uInt>(buf.size()))));
    return w.take();
}

template <class T>
Network<T> decode_params(std::span<const std::uint8_t> data) {
    if (data.size() < 4 || !std::equal(kMagic, kMagic + 4, data.begin())) {
        if (data.size() < 4) throw TruncatedError("checkpoint: truncated header");
        throw BadMagicError("checkpoint: bad magic (expected PATW)");
    }
    bytes::Reader r(data);
    r.raw(4);
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw VersionError("checkpoint: unsupported version " + std::to_string(version));
    }
    const std::string tag = r.str();
    Architecture arch;
    try {
        arch = Architecture::from_tag(tag);
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
    Network<T> net = make_network<T>(arch);
    const std::uint32_t count = r.u32();
    if (count != net.layers.size()) throw FormatError("checkpoint: layer count does not match '" + tag + "'");
    for (auto& l : net.layers) {
        const std::uint32_t co = r.u32(), ci = r.u32(), k1 = r.u32(), k2 = r.u32();
        if (co != l.c_out || ci != l.c_in || k1 != l.k || k2 != l.k) {
            throw FormatError("checkpoint: layer shape does not match '" + tag + "'");
        }
        for (T& v : l.kernel) v = static_cast<T>(r.f64());
        for (T& v : l.bias) v = static_cast<T>(r.f64());
    }
    const std::size_t body = r.position();
    const std::uint32_t stored = r.u32();
    if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
    const auto actual = static_cast<std::uint32_t>(crc32(0L, data.data(), static_cast<uInt>(body)));
    if (stored != actual) throw ChecksumError("checkpoint: CRC-32 mismatch");
    for (const auto& l : net.layers) {
        for (T v : l.kernel)
            if (!std::isfinite(v)) throw FormatError("checkpoint: non-finite weight");
        for (T v : l.bias)
            if (!std::isfinite(v)) throw FormatError("checkpoint: non-finite bias");
    }
    return net;
}

template <class T>
void save_params(const std::filesystem::path& path, const Network<T>& net) {
    write_file(path, encode_params(net));
}

template <class T>
Network<T> load_params(const std::filesystem::path& path) {
    const auto data = read_file(path);
    try {
        return decode_params<T>(data);
    } catch (const TruncatedError& e) {
        throw TruncatedError(path.string() + ": " + e.what());
    } catch (const BadMagicError& e) {
        throw BadMagicError(path.string() + ": " + e.what());
    } catch (const VersionError& e) {
        throw VersionError(path.string() + ": " + e.what());
    } catch (const ChecksumError& e) {
        throw ChecksumError(path.string() + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

#define PAT_INSTANTIATE(T)                                                                                    \
    template struct Network<T>;                                                                                \
    template Network<T> make_network<T>(const Architecture&);                                                  \
    template Network<T> init_network<T>(const Architecture&, Seed);                                            \
    template Tensor<T> forward(const Network<T>&, const Tensor<T>&);                                           \
    template Tensor<T> forward_train(const Network<T>&, const Tensor<T>&, Tape<T>&);                           \
    template void backward(const Network<T>&, const Tape<T>&, const Tensor<T>&, Network<T>&, Tensor<T>*);     \
    template T l1_loss(const Tensor<T>&, const Tensor<T>&, Tensor<T>*);                                        \
    template std::vector<std::uint8_t> encode_params(const Network<T>&);                                       \
    template Network<T> decode_params<T>(std::span<const std::uint8_t>);                                       \
    template void save_params(const std::filesystem::path&, const Network<T>&);                                \
    template Network<T> load_params<T>(const std::filesystem::path&);

PAT_INSTANTIATE(float)
PAT_INSTANTIATE(double)

#undef PAT_INSTANTIATE

}  // namespace pat::nn
