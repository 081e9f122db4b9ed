#include "pat/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "pat/errors.hpp"

namespace pat {

namespace {

bool same_grid(const GridImage& a, const GridImage& b) {
    return a.width() == b.width() && a.height() == b.height() && a.extent() == b.extent();
}

void put(std::ostringstream& os, double v) { os << std::setprecision(9) << v; }

}  // namespace

double rel_mse(const GridImage& truth, const GridImage& recon) {
    if (!same_grid(truth, recon)) throw InvalidArgument("rel_mse: images are on different grids");
    const auto t = truth.values();
    const auto r = recon.values();
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double e = t[i] - r[i];
        err += e * e;
        ref += t[i] * t[i];
    }
    if (!(ref > 0.0)) throw NumericalError("rel_mse: ground truth has zero norm");
    return err / ref;
}

std::vector<ProfilePoint> cross_section(const GridImage& image, std::size_t row) {
    if (row >= image.height()) {
        throw InvalidArgument("cross_section: row " + std::to_string(row) + " outside [0, " +
                              std::to_string(image.height()) + ")");
    }
    std::vector<ProfilePoint> out(image.width());
    for (std::size_t c = 0; c < image.width(); ++c) out[c] = {image.x_center(c), image.at(c, row)};
    return out;
}

std::size_t row_at(const GridImage& image, double y_mm) {
    const Extent& e = image.extent();
    if (!(y_mm >= e.y_min && y_mm <= e.y_max)) {
        throw InvalidArgument("cross_section: y = " + std::to_string(y_mm) + " mm is outside the extent");
    }
    const auto row = static_cast<std::size_t>(std::floor((e.y_max - y_mm) / image.dy()));
    return std::min(row, image.height() - 1);
}

std::vector<ProfilePoint> cross_section_at(const GridImage& image, double y_mm) {
    return cross_section(image, row_at(image, y_mm));
}

double MethodScores::mean() const {
    if (rel_mse.empty()) return std::nan("");
    double s = 0.0;
    for (double v : rel_mse) s += v;
    return s / static_cast<double>(rel_mse.size());
}

double MethodScores::median() const {
    if (rel_mse.empty()) return std::nan("");
    std::vector<double> v = rel_mse;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const MethodScores* EvalReport::find(const std::string& name) const {
    for (const auto& m : methods)
        if (m.name == name) return &m;
    return nullptr;
}

void EvalReport::add(MethodScores scores) {
    if (scores.rel_mse.size() != images.size()) {
        throw InvalidArgument("report: method '" + scores.name + "' has " + std::to_string(scores.rel_mse.size()) +
                              " scores for " + std::to_string(images.size()) + " images");
    }
    if (find(scores.name)) throw InvalidArgument("report: duplicate method '" + scores.name + "'");
    methods.push_back(std::move(scores));
}

std::string report_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "image";
    for (const auto& m : report.methods) os << ',' << m.name;
    os << '\n';
    for (std::size_t i = 0; i < report.images.size(); ++i) {
        os << report.images[i];
        for (const auto& m : report.methods) {
            os << ',';
            put(os, m.rel_mse[i]);
        }
        os << '\n';
    }
    os << "mean";
    for (const auto& m : report.methods) {
        os << ',';
        put(os, m.mean());
    }
    os << "\nmedian";
    for (const auto& m : report.methods) {
        os << ',';
        put(os, m.median());
    }
    os << '\n';
    return os.str();
}

std::string report_text(const EvalReport& report) {
    std::ostringstream os;
    os << "Relative MSE |X - X_rec|^2 / |X|^2 over " << report.images.size() << " images\n";
    for (const auto& m : report.manifests) os << "input: " << m << '\n';
    os << '\n' << std::left << std::setw(12) << "method" << std::right << std::setw(14) << "mean" << std::setw(14)
       << "median" << '\n';
    for (const auto& m : report.methods) {
        os << std::left << std::setw(12) << m.name << std::right << std::fixed << std::setprecision(6)
           << std::setw(14) << m.mean() << std::setw(14) << m.median() << '\n';
        os.unsetf(std::ios::fixed);
    }
    return os.str();
}

std::string profile_csv(std::size_t row, const GridImage& truth, const GridImage& fbp, const GridImage& tv,
                        const GridImage& cnn) {
    if (!same_grid(truth, fbp) || !same_grid(truth, tv) || !same_grid(truth, cnn)) {
        throw InvalidArgument("profile_csv: images are on different grids");
    }
    const auto t = cross_section(truth, row);
    std::ostringstream os;
    os << "x_mm,truth,fbp,tv,cnn\n";
    for (std::size_t c = 0; c < t.size(); ++c) {
        put(os, t[c].x_mm);
        for (const GridImage* img : {&truth, &fbp, &tv, &cnn}) {
            os << ',';
            put(os, img->at(c, row));
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace pat
