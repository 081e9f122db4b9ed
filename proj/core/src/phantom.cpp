#include "pat/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <nlohmann/json.hpp>

#include "pat/errors.hpp"
#include "pat/io.hpp"
#include "pat/parallel.hpp"
#include "pat/version.hpp"
#include "quadrature.hpp"

namespace pat {

namespace {

using nlohmann::json;

// Gaussian tails beyond this many sigmas are dropped from the radial blur.
constexpr double kBlurCutoff = 6.0;

const detail::GaussRule& blur_rule() {
    static const detail::GaussRule rule = detail::gauss_legendre(48);
    return rule;
}

double unblurred_profile(const RingSpec& ring, double rho) {
    const double half = 0.5 * ring.width;
    const double offset = rho - ring.radius;
    if (std::abs(offset) > half) return 0.0;
    const double bump = 0.5 * (1.0 + std::cos(std::numbers::pi * offset / half));
    const double depth = std::max(0.0, ring.radius + half - rho);
    return bump * std::exp(-ring.decay_rate * depth);
}

void validate_ring(const RingSpec& ring) {
    if (!(ring.radius > 0.0)) throw InvalidArgument("ring radius must be positive");
    if (!(ring.width > 0.0)) throw InvalidArgument("ring width must be positive");
    if (!(ring.magnitude >= 0.0)) throw InvalidArgument("ring magnitude must be non-negative");
    if (!(ring.blur_sigma >= 0.0)) throw InvalidArgument("ring blur must be non-negative");
    if (!(ring.decay_rate >= 0.0)) throw InvalidArgument("ring decay rate must be non-negative");
    if (!std::isfinite(ring.center.x) || !std::isfinite(ring.center.y)) {
        throw InvalidArgument("ring center must be finite");
    }
}

void check_range(const Range& r, const char* name, double lower_bound, bool strict) {
    const bool ok = strict ? r.lo > lower_bound : r.lo >= lower_bound;
    if (!ok || !(r.hi >= r.lo) || !std::isfinite(r.hi)) {
        throw InvalidArgument(std::string("phantom range '") + name + "' is invalid");
    }
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range range_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json ring_json(const RingSpec& r) {
    return json{{"center", json::array({r.center.x, r.center.y})},
                {"radius", r.radius},
                {"width", r.width},
                {"magnitude", r.magnitude},
                {"blur_sigma", r.blur_sigma},
                {"decay_rate", r.decay_rate}};
}

RingSpec ring_from(const json& j) {
    RingSpec r;
    r.center = {j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()};
    r.radius = j.at("radius").get<double>();
    r.width = j.at("width").get<double>();
    r.magnitude = j.at("magnitude").get<double>();
    r.blur_sigma = j.at("blur_sigma").get<double>();
    r.decay_rate = j.at("decay_rate").get<double>();
    return r;
}

std::string phantom_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "phantom_%05zu.pati", index);
    return buf;
}

}  // namespace

double ring_profile(const RingSpec& ring, double rho) {
    if (ring.blur_sigma <= 0.0) return unblurred_profile(ring, rho);
    const double sigma = ring.blur_sigma;
    const double lo = std::max(ring.radius - 0.5 * ring.width, rho - kBlurCutoff * sigma);
    const double hi = std::min(ring.radius + 0.5 * ring.width, rho + kBlurCutoff * sigma);
    if (!(hi > lo)) return 0.0;
    const auto& rule = blur_rule();
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma);
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double x = mid + half * rule.nodes[k];
        const double z = (rho - x) / sigma;
        sum += rule.weights[k] * unblurred_profile(ring, x) * std::exp(-0.5 * z * z);
    }
    return sum * half * norm;
}

GridImage render_ring(const RingSpec& ring, const GridImage& grid_template) {
    validate_ring(ring);
    const Extent& e = grid_template.extent();
    const double outer = ring.outer_radius();
    if (ring.center.x - outer < e.x_min || ring.center.x + outer > e.x_max ||
        ring.center.y - outer < e.y_min || ring.center.y + outer > e.y_max) {
        throw InvalidArgument("ring extends outside the image extent");
    }
    GridImage out = grid_template.zeros_like();
    if (ring.magnitude == 0.0) return out;
    const double cutoff = ring.radius + 0.5 * ring.width + kBlurCutoff * ring.blur_sigma;
    for (std::size_t row = 0; row < out.height(); ++row) {
        for (std::size_t col = 0; col < out.width(); ++col) {
            const double rho = distance(out.center_of(col, row), ring.center);
            if (rho > cutoff) continue;
            out.at(col, row) = ring.magnitude * ring_profile(ring, rho);
        }
    }
    return out;
}

void PhantomRanges::validate() const {
    if (min_rings < 1 || max_rings < min_rings) throw InvalidArgument("invalid ring count range");
    check_range(radius, "radius", 0.0, true);
    check_range(width, "width", 0.0, true);
    check_range(magnitude, "magnitude", 0.0, true);
    check_range(blur_sigma, "blur_sigma", 0.0, false);
    check_range(decay_rate, "decay_rate", 0.0, false);
}

GridImage render_phantom(const PhantomSpec& spec, const GridImage& grid_template) {
    GridImage sum = grid_template.zeros_like();
    for (const auto& ring : spec.rings) {
        const GridImage layer = render_ring(ring, grid_template);
        auto dst = sum.values();
        auto src = layer.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    auto values = sum.values();
    const double peak = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
    if (!(peak > 0.0)) throw NumericalError("phantom has no positive pixel; cannot normalise");
    for (auto& v : values) v /= peak;
    return sum;
}

PhantomSpec draw_phantom(Seed seed, const GridImage& grid_template, const PhantomRanges& ranges) {
    ranges.validate();
    Rng rng(seed);
    PhantomSpec spec;
    spec.seed = seed;
    const auto count = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(ranges.min_rings), static_cast<std::int64_t>(ranges.max_rings)));
    const Extent& e = grid_template.extent();
    std::size_t retries = 0;
    while (spec.rings.size() < count) {
        RingSpec ring;
        ring.radius = rng.uniform(ranges.radius.lo, ranges.radius.hi);
        ring.width = rng.uniform(ranges.width.lo, ranges.width.hi);
        ring.magnitude = rng.uniform(ranges.magnitude.lo, ranges.magnitude.hi);
        ring.blur_sigma = rng.uniform(ranges.blur_sigma.lo, ranges.blur_sigma.hi);
        ring.decay_rate = rng.uniform(ranges.decay_rate.lo, ranges.decay_rate.hi);
        const double margin = ring.outer_radius();
        const double cx_lo = e.x_min + margin;
        const double cx_hi = e.x_max - margin;
        const double cy_lo = e.y_min + margin;
        const double cy_hi = e.y_max - margin;
        // Drawn even on rejection so the stream position depends only on the attempt count.
        const double ux = rng.uniform();
        const double uy = rng.uniform();
        if (cx_hi < cx_lo || cy_hi < cy_lo) {
            if (++retries > ranges.retry_budget) {
                throw InvalidArgument("phantom ranges cannot fit a ring inside the extent (gave up after " +
                                      std::to_string(ranges.retry_budget) + " retries)");
            }
            continue;
        }
        ring.center = {cx_lo + (cx_hi - cx_lo) * ux, cy_lo + (cy_hi - cy_lo) * uy};
        spec.rings.push_back(ring);
    }
    return spec;
}

SampledPhantom sample_phantom(Seed seed, const GridImage& grid_template, const PhantomRanges& ranges) {
    PhantomSpec spec = draw_phantom(seed, grid_template, ranges);
    GridImage image = render_phantom(spec, grid_template);
    return {std::move(spec), std::move(image)};
}

DatasetManifest generate_dataset(std::size_t count, Seed seed, std::uint64_t stream,
                                 const std::filesystem::path& out_dir, const GridImage& grid_template,
                                 const PhantomRanges& ranges) {
    ranges.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError(out_dir.string(), "cannot create directory: " + ec.message());

    DatasetManifest manifest;
    manifest.toolkit_version = kToolkitVersion;
    manifest.seed = seed;
    manifest.stream = stream;
    manifest.width = grid_template.width();
    manifest.height = grid_template.height();
    manifest.extent = grid_template.extent();
    manifest.ranges = ranges;
    manifest.entries.resize(count);

    parallel_for(count, [&](std::size_t i) {
        auto [spec, image] = sample_phantom(derive_seed(seed, stream, i), grid_template, ranges);
        DatasetEntry& entry = manifest.entries[i];
        entry.file = phantom_file_name(i);
        entry.spec = std::move(spec);
        write_image(out_dir / entry.file, image);
    });
    write_text(out_dir / kManifestName, manifest_to_json(manifest));
    return manifest;
}

std::string manifest_to_json(const DatasetManifest& m) {
    json phantoms = json::array();
    for (const auto& entry : m.entries) {
        json rings = json::array();
        for (const auto& r : entry.spec.rings) rings.push_back(ring_json(r));
        phantoms.push_back(json{{"file", entry.file}, {"seed", entry.spec.seed.value}, {"rings", rings}});
    }
    json j{{"toolkit_version", m.toolkit_version},
           {"seed", m.seed.value},
           {"stream", m.stream},
           {"width", m.width},
           {"height", m.height},
           {"extent", json::array({m.extent.x_min, m.extent.x_max, m.extent.y_min, m.extent.y_max})},
           {"ranges",
            json{{"rings", json::array({m.ranges.min_rings, m.ranges.max_rings})},
                 {"radius", range_json(m.ranges.radius)},
                 {"width", range_json(m.ranges.width)},
                 {"magnitude", range_json(m.ranges.magnitude)},
                 {"blur_sigma", range_json(m.ranges.blur_sigma)},
                 {"decay_rate", range_json(m.ranges.decay_rate)},
                 {"retry_budget", m.ranges.retry_budget}}},
           {"phantoms", phantoms}};
    return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
    DatasetManifest m;
    try {
        const json j = json::parse(text);
        m.toolkit_version = j.at("toolkit_version").get<std::string>();
        m.seed = Seed{j.at("seed").get<std::uint64_t>()};
        m.stream = j.at("stream").get<std::uint64_t>();
        m.width = j.at("width").get<std::size_t>();
        m.height = j.at("height").get<std::size_t>();
        const auto& e = j.at("extent");
        m.extent = {e.at(0).get<double>(), e.at(1).get<double>(), e.at(2).get<double>(), e.at(3).get<double>()};
        const auto& r = j.at("ranges");
        m.ranges.min_rings = r.at("rings").at(0).get<std::size_t>();
        m.ranges.max_rings = r.at("rings").at(1).get<std::size_t>();
        m.ranges.radius = range_from(r.at("radius"));
        m.ranges.width = range_from(r.at("width"));
        m.ranges.magnitude = range_from(r.at("magnitude"));
        m.ranges.blur_sigma = range_from(r.at("blur_sigma"));
        m.ranges.decay_rate = range_from(r.at("decay_rate"));
        m.ranges.retry_budget = r.at("retry_budget").get<std::size_t>();
        for (const auto& p : j.at("phantoms")) {
            DatasetEntry entry;
            entry.file = p.at("file").get<std::string>();
            entry.spec.seed = Seed{p.at("seed").get<std::uint64_t>()};
            for (const auto& ring : p.at("rings")) entry.spec.rings.push_back(ring_from(ring));
            m.entries.push_back(std::move(entry));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    const auto data = read_file(path);
    try {
        return manifest_from_json(std::string(data.begin(), data.end()));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace pat
