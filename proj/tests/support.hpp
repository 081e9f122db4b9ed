#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pat/geometry.hpp"
#include "pat/rng.hpp"

namespace pat::test {

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("pat_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline GridImage random_image(std::size_t w, std::size_t h, Extent e, Rng& rng) {
    GridImage img(w, h, e);
    for (double& v : img.values()) v = rng.uniform(-1.0, 1.0);
    return img;
}

inline Sinogram random_sinogram(const SensorGeometry& g, std::size_t n, double dt, Rng& rng) {
    Sinogram s(g, n, dt);
    for (double& v : s.values()) v = rng.uniform(-1.0, 1.0);
    return s;
}

inline double rel_l2(std::span<const double> a, std::span<const double> b) {
    double d = 0.0, n = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] - b[i]) * (a[i] - b[i]);
        n += b[i] * b[i];
    }
    return std::sqrt(d / n);
}

}  // namespace pat::test
