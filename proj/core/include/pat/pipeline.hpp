#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pat/errors.hpp"
#include "pat/eval.hpp"
#include "pat/geometry.hpp"
#include "pat/nn/network.hpp"
#include "pat/nn/train.hpp"
#include "pat/phantom.hpp"
#include "pat/tvmin.hpp"
#include "pat/wave.hpp"

namespace pat {

/// Invalid pipeline configuration; field() names the offending key.
class ConfigError : public InvalidArgument {
public:
    ConfigError(const std::string& field, const std::string& what)
        : InvalidArgument(field + ": " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct PipelineConfig {
    // Reconstruction grid.
    std::size_t width = 64;
    std::size_t height = 64;
    Extent extent = kDefaultExtent;

    // Detectors: "lower" (s_2 < arc_y_cut), "full" or "angles" (theta_start..theta_end).
    double radius = 50.0;
    std::size_t detectors = 28;
    std::string arc = "lower";
    double arc_y_cut = -11.1;
    double theta_start = 0.0;
    double theta_end = 0.0;

    // Time axis: samples uniformly on [0, t_max].
    std::size_t samples = 1024;
    double t_max = 67.3;
    std::size_t angular_points = 4096;

    double noise_level = 0.1;
    std::string noise_reference = "std";  // "std" or "maxabs"

    double fbp_t_end = 0.0;  // 0: full record

    double tv_lambda = 0.005;
    std::size_t tv_iterations = 50;
    bool tv_nonnegative = false;

    std::size_t train_count = 200;
    std::size_t eval_count = 50;

    double learning_rate = 1e-3;
    double momentum = 0.99;
    std::size_t batch_size = 1;
    std::size_t sweeps = 30;
    bool snet_residual = false;
    std::size_t unet_depth = 3;
    std::size_t unet_base = 32;
    bool unet_residual = true;

    std::uint64_t seed = 1;

    /// Throws ConfigError naming the first inconsistent field.
    void validate() const;

    static PipelineConfig desk();
    static PipelineConfig full();

    double dt() const { return t_max / static_cast<double>(samples - 1); }
    GridImage grid() const { return GridImage(width, height, extent); }
    SensorGeometry geometry() const;
    ForwardConfig forward_config() const;
    NoiseReference noise_ref() const;
    TvConfig tv_config() const;
    nn::TrainConfig train_config() const;
    nn::Architecture architecture(const std::string& name) const;

    /// Canonical JSON (sorted keys) and its FNV-1a 64-bit hash.
    std::string to_json() const;
    std::uint64_t hash() const;
};

/// Seed streams used by the pipeline.
inline constexpr std::uint64_t kTrainStream = 1;
inline constexpr std::uint64_t kEvalStream = 2;
inline constexpr std::uint64_t kNoiseStream = 3;
inline constexpr std::uint64_t kInitStream = 4;
inline constexpr std::uint64_t kShuffleStream = 5;

using Logger = std::function<void(const std::string&)>;

/// Provenance record as JSON; input paths are written relative to base_dir.
std::string provenance_json(const std::string& stage, const PipelineConfig& cfg,
                            const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& base_dir);

/// Writes <dir>/provenance.json: stage, toolkit version, config hash, seed,
/// the configuration and input paths (relative to dir).
void write_provenance(const std::filesystem::path& dir, const std::string& stage, const PipelineConfig& cfg,
                      const std::vector<std::filesystem::path>& inputs);

/// Files with the given extension directly inside dir, sorted by name.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, const std::string& extension);

/// Phantom set `set` ("train" or "eval") with the configured count.
void stage_generate(const PipelineConfig& cfg, const std::string& set, const std::filesystem::path& out_dir,
                    const Logger& log = {});

/// Simulates noisy data for one phantom; the noise seed is given explicitly.
Sinogram simulate_one(const PipelineConfig& cfg, const GridImage& phantom, Seed noise_seed);
/// Every *.pati in in_dir to <stem>.pats. When in_dir holds a manifest the
/// noise seed of phantom i is derive_seed(<its seed>, kNoiseStream, 0),
/// otherwise derive_seed(cfg.seed, kNoiseStream, i).
void stage_simulate(const PipelineConfig& cfg, const std::filesystem::path& in_dir,
                    const std::filesystem::path& out_dir, const Logger& log = {});

void stage_fbp(const PipelineConfig& cfg, const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
               const Logger& log = {});
/// Also writes objective/<stem>.csv (iter,data_term,tv_term,total).
void stage_tv(const PipelineConfig& cfg, const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
              const Logger& log = {});

struct TrainPaths {
    std::filesystem::path inputs;         // FBP images, train set
    std::filesystem::path targets;        // phantoms, train set
    std::filesystem::path eval_inputs;    // optional
    std::filesystem::path eval_targets;   // optional
};
/// Trains `arch_name` ("snet" or "unet"); writes <out_dir>/<arch_name>.patw and
/// <arch_name>_loss.csv.
void stage_train(const PipelineConfig& cfg, const std::string& arch_name, const TrainPaths& paths,
                 const std::filesystem::path& out_dir, const Logger& log = {});

void stage_cnn(const std::filesystem::path& checkpoint, const std::filesystem::path& in_dir,
               const std::filesystem::path& out_dir, const PipelineConfig& cfg, const Logger& log = {});

struct MethodDir {
    std::string name;
    std::filesystem::path dir;
};
/// Writes report.csv, report.txt and, when the methods fbp and tv exist,
/// profile_<cnn>.csv for every other method. profile_row < 0 picks the row
/// through the topmost ring center of the first image (from the manifest)
/// or the middle row without one.
EvalReport stage_evaluate(const std::filesystem::path& truth_dir, const std::vector<MethodDir>& methods,
                          const std::filesystem::path& out_dir, const PipelineConfig& cfg, long profile_row = -1,
                          const Logger& log = {});

/// The whole experiment under root: phantoms/, sinograms/, fbp/, tv/,
/// models/, cnn/<arch>/, report/.
EvalReport reproduce(const PipelineConfig& cfg, const std::filesystem::path& root, const Logger& log = {});

}  // namespace pat
