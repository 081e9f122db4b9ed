#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pat/geometry.hpp"

namespace pat {

/// |truth - recon|^2 / |truth|^2. Throws InvalidArgument on shape mismatch and
/// NumericalError when the truth has zero norm.
double rel_mse(const GridImage& truth, const GridImage& recon);

struct ProfilePoint {
    double x_mm = 0.0;
    double value = 0.0;
};

/// Pixel row `row` (0 = top) as (x of pixel center, value) pairs.
std::vector<ProfilePoint> cross_section(const GridImage& image, std::size_t row);
/// Row whose pixel band contains physical y; InvalidArgument outside the extent.
std::size_t row_at(const GridImage& image, double y_mm);
std::vector<ProfilePoint> cross_section_at(const GridImage& image, double y_mm);

struct MethodScores {
    std::string name;
    std::vector<double> rel_mse;
    double mean() const;
    double median() const;
};

struct EvalReport {
    /// Identifiers of the evaluated images, aligned with every MethodScores.
    std::vector<std::string> images;
    std::vector<MethodScores> methods;
    /// Manifests the inputs came from.
    std::vector<std::string> manifests;

    const MethodScores* find(const std::string& name) const;
    /// Throws InvalidArgument if the score count differs from images.size().
    void add(MethodScores scores);
};

/// "image,<method>,..." rows, then "mean,..." and "median,...".
std::string report_csv(const EvalReport& report);
std::string report_text(const EvalReport& report);

/// Overlay of one row across reconstructions: columns x_mm,truth,fbp,tv,cnn.
/// All images must share the grid.
std::string profile_csv(std::size_t row, const GridImage& truth, const GridImage& fbp, const GridImage& tv,
                        const GridImage& cnn);

}  // namespace pat
