#include "pat/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "pat/errors.hpp"

namespace pat {

namespace bytes {

void Writer::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void Writer::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void Writer::str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
}

std::span<const std::uint8_t> Reader::raw(std::size_t n) {
    if (n > remaining()) {
        throw TruncatedError("truncated payload: need " + std::to_string(n) + " bytes at offset " +
                             std::to_string(pos_) + ", have " + std::to_string(remaining()));
    }
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint32_t Reader::u32() {
    auto b = raw(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t Reader::u64() {
    auto b = raw(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

float Reader::f32() { return std::bit_cast<float>(u32()); }

double Reader::f64() { return std::bit_cast<double>(u64()); }

std::string Reader::str() {
    const std::uint32_t n = u32();
    auto b = raw(n);
    return std::string(b.begin(), b.end());
}

}  // namespace bytes

namespace {

constexpr char kImageMagic[4] = {'P', 'A', 'T', 'I'};
constexpr char kSinoMagic[4] = {'P', 'A', 'T', 'S'};

void expect_magic(bytes::Reader& r, const char (&magic)[4]) {
    auto m = r.raw(4);
    if (std::memcmp(m.data(), magic, 4) != 0) {
        throw BadMagicError(std::string("bad magic, expected \"") + std::string(magic, 4) + "\"");
    }
}

void expect_version(bytes::Reader& r, std::uint32_t expected) {
    const std::uint32_t v = r.u32();
    if (v != expected) {
        throw VersionError("unsupported format version " + std::to_string(v) + " (expected " +
                           std::to_string(expected) + ")");
    }
}

void put_magic(bytes::Writer& w, const char (&magic)[4]) {
    w.raw({reinterpret_cast<const std::uint8_t*>(magic), 4});
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
        throw InvalidArgument(std::string(what) + " too large for container");
    }
    return static_cast<std::uint32_t>(v);
}

std::vector<double> read_f32_payload(bytes::Reader& r, std::size_t count) {
    if (count > r.remaining() / 4) {
        throw TruncatedError("truncated payload: expected " + std::to_string(count) +
                             " f32 values, have " + std::to_string(r.remaining()) + " bytes");
    }
    std::vector<double> values(count);
    for (auto& v : values) {
        const float f = r.f32();
        if (!std::isfinite(f)) throw FormatError("non-finite value in payload");
        v = f;
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after payload");
    return values;
}

}  // namespace

std::vector<std::uint8_t> encode_image(const GridImage& image) {
    bytes::Writer w;
    put_magic(w, kImageMagic);
    w.u32(kImageFormatVersion);
    w.u32(checked_u32(image.width(), "width"));
    w.u32(checked_u32(image.height(), "height"));
    const Extent& e = image.extent();
    w.f64(e.x_min);
    w.f64(e.x_max);
    w.f64(e.y_min);
    w.f64(e.y_max);
    for (double v : image.values()) w.f32(static_cast<float>(v));
    return w.take();
}

GridImage decode_image(std::span<const std::uint8_t> data) {
    bytes::Reader r(data);
    expect_magic(r, kImageMagic);
    expect_version(r, kImageFormatVersion);
    const std::uint32_t width = r.u32();
    const std::uint32_t height = r.u32();
    Extent e;
    e.x_min = r.f64();
    e.x_max = r.f64();
    e.y_min = r.f64();
    e.y_max = r.f64();
    if (width == 0 || height == 0) throw FormatError("image header has zero dimension");
    if (!(e.x_max > e.x_min) || !(e.y_max > e.y_min)) throw FormatError("image header has degenerate extent");
    auto values = read_f32_payload(r, static_cast<std::size_t>(width) * height);
    return GridImage(width, height, e, std::move(values));
}

std::vector<std::uint8_t> encode_sinogram(const Sinogram& sino) {
    bytes::Writer w;
    put_magic(w, kSinoMagic);
    w.u32(kSinogramFormatVersion);
    w.u32(checked_u32(sino.detectors(), "detector count"));
    w.u32(checked_u32(sino.samples(), "sample count"));
    const SensorGeometry& g = sino.geometry();
    w.f64(g.radius());
    w.f64(g.theta_start());
    w.f64(g.theta_end());
    w.f64(sino.dt());
    for (double v : sino.values()) w.f32(static_cast<float>(v));
    return w.take();
}

Sinogram decode_sinogram(std::span<const std::uint8_t> data) {
    bytes::Reader r(data);
    expect_magic(r, kSinoMagic);
    expect_version(r, kSinogramFormatVersion);
    const std::uint32_t m = r.u32();
    const std::uint32_t n = r.u32();
    const double radius = r.f64();
    const double theta_start = r.f64();
    const double theta_end = r.f64();
    const double dt = r.f64();
    if (m < 2 || n < 2) throw FormatError("sinogram header needs M >= 2 and N >= 2");
    if (!(dt > 0.0)) throw FormatError("sinogram header has non-positive dt");
    SensorGeometry geom;
    try {
        geom = make_arc_geometry(radius, m, theta_start, theta_end);
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("sinogram header has invalid geometry: ") + e.what());
    }
    auto values = read_f32_payload(r, static_cast<std::size_t>(m) * n);
    return Sinogram(std::move(geom), n, dt, std::move(values));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open for reading");
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError(path.string(), "read failed");
    return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError(path.string(), "write failed");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void write_image(const std::filesystem::path& path, const GridImage& image) {
    write_file(path, encode_image(image));
}

GridImage read_image(const std::filesystem::path& path) {
    const auto data = read_file(path);
    try {
        return decode_image(data);
    } catch (const TruncatedError& e) {
        throw TruncatedError(path.string() + ": " + e.what());
    } catch (const BadMagicError& e) {
        throw BadMagicError(path.string() + ": " + e.what());
    } catch (const VersionError& e) {
        throw VersionError(path.string() + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_sinogram(const std::filesystem::path& path, const Sinogram& sino) {
    write_file(path, encode_sinogram(sino));
}

Sinogram read_sinogram(const std::filesystem::path& path) {
    const auto data = read_file(path);
    try {
        return decode_sinogram(data);
    } catch (const TruncatedError& e) {
        throw TruncatedError(path.string() + ": " + e.what());
    } catch (const BadMagicError& e) {
        throw BadMagicError(path.string() + ": " + e.what());
    } catch (const VersionError& e) {
        throw VersionError(path.string() + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void export_pgm(const std::filesystem::path& path, const GridImage& image) {
    const auto v = image.values();
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double span = *hi_it - lo;
    std::string header = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + v.size());
    for (double x : v) {
        const double s = span > 0.0 ? (x - lo) / span : 0.0;
        out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(s, 0.0, 1.0) * 255.0)));
    }
    write_file(path, out);
}

}  // namespace pat
