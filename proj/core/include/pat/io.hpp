#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pat/geometry.hpp"

namespace pat {

inline constexpr std::uint32_t kImageFormatVersion = 1;
inline constexpr std::uint32_t kSinogramFormatVersion = 1;

// PATI: "PATI", u32 version, u32 width, u32 height, f64 x_min, x_max, y_min,
// y_max, then width*height f32 row-major. PATS: "PATS", u32 version, u32 M,
// u32 N, f64 R, theta_start, theta_end, dt, then M*N f32 detector-major.
// All little-endian. Values are rounded to f32 on write.

std::vector<std::uint8_t> encode_image(const GridImage& image);
GridImage decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_sinogram(const Sinogram& sino);
Sinogram decode_sinogram(std::span<const std::uint8_t> bytes);

void write_image(const std::filesystem::path& path, const GridImage& image);
GridImage read_image(const std::filesystem::path& path);

void write_sinogram(const std::filesystem::path& path, const Sinogram& sino);
Sinogram read_sinogram(const std::filesystem::path& path);

/// 8-bit binary PGM with linear min-max scaling. Export only.
void export_pgm(const std::filesystem::path& path, const GridImage& image);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

// Little-endian byte buffer helpers, shared with the checkpoint format.
namespace bytes {

class Writer {
public:
    void raw(std::span<const std::uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f32(float v);
    void f64(double v);
    void str(const std::string& s);
    std::vector<std::uint8_t>& buffer() { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

/// Throws TruncatedError when reading past the end.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}
    std::span<const std::uint8_t> raw(std::size_t n);
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    double f64();
    std::string str();
    std::size_t remaining() const { return data_.size() - pos_; }
    std::size_t position() const { return pos_; }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

}  // namespace bytes

}  // namespace pat
