#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "pat/geometry.hpp"
#include "pat/rng.hpp"

namespace pat {

/// One smooth ring. The radial profile before blur is a raised-cosine annulus
///   h(rho) = 1/2 (1 + cos(pi (rho - r) / (w/2)))   for |rho - r| <= w/2,
/// damped by exp(-decay (r + w/2 - rho)) toward the inside, then convolved
/// along rho with a Gaussian of standard deviation blur_sigma.
struct RingSpec {
    Point center;
    double radius = 1.0;      // r, mm
    double width = 0.5;       // w, mm
    double magnitude = 1.0;   // a
    double blur_sigma = 0.0;  // mm
    double decay_rate = 0.0;  // 1/mm

    /// Radius beyond which the rendered profile is treated as zero.
    double outer_radius() const { return radius + 0.5 * width + 3.0 * blur_sigma; }
};

/// Unscaled radial profile g(rho) of a ring (magnitude not applied).
double ring_profile(const RingSpec& ring, double rho);

/// a * g(|x - center|) sampled at pixel centers. Throws InvalidArgument if the
/// spec is invalid or the outer circle leaves the template's extent.
GridImage render_ring(const RingSpec& ring, const GridImage& grid_template);

struct PhantomSpec {
    std::vector<RingSpec> rings;
    Seed seed;
};

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct PhantomRanges {
    std::size_t min_rings = 2;
    std::size_t max_rings = 6;
    Range radius{1.5, 5.0};
    Range width{0.6, 2.0};
    Range magnitude{0.5, 1.0};
    Range blur_sigma{0.05, 0.2};
    Range decay_rate{0.1, 0.5};
    /// Ring redraws allowed per phantom before giving up.
    std::size_t retry_budget = 1000;

    void validate() const;
};

/// Sum of rendered rings divided by the maximum, so that max == 1 exactly.
GridImage render_phantom(const PhantomSpec& spec, const GridImage& grid_template);

/// Draws a ring count uniformly in [min_rings, max_rings], then every ring
/// parameter uniformly in its range (center uniform in the extent shrunk by
/// the outer radius). Throws InvalidArgument when the ranges cannot fit any
/// ring inside the extent within the retry budget.
PhantomSpec draw_phantom(Seed seed, const GridImage& grid_template, const PhantomRanges& ranges);

struct SampledPhantom {
    PhantomSpec spec;
    GridImage image;
};

SampledPhantom sample_phantom(Seed seed, const GridImage& grid_template, const PhantomRanges& ranges);

struct DatasetEntry {
    std::string file;
    PhantomSpec spec;
};

struct DatasetManifest {
    std::string toolkit_version;
    Seed seed;
    std::uint64_t stream = 0;
    std::size_t width = 0;
    std::size_t height = 0;
    Extent extent;
    PhantomRanges ranges;
    std::vector<DatasetEntry> entries;
};

inline constexpr const char* kManifestName = "manifest.json";

/// Writes `count` phantoms (PATI, "phantom_00000.pati", ...) and manifest.json
/// into out_dir. Phantom i uses derive_seed(seed, stream, i).
DatasetManifest generate_dataset(std::size_t count, Seed seed, std::uint64_t stream,
                                 const std::filesystem::path& out_dir, const GridImage& grid_template,
                                 const PhantomRanges& ranges);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace pat
