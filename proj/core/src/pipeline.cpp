#include "pat/pipeline.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

#include "pat/fbp.hpp"
#include "pat/io.hpp"
#include "pat/version.hpp"

namespace pat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void say(const Logger& log, const std::string& msg) {
    if (log) log(msg);
}

void require(bool ok, const char* field, const std::string& what) {
    if (!ok) throw ConfigError(field, what);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
}

std::string relative_to(const fs::path& p, const fs::path& base) {
    const fs::path a = fs::absolute(p).lexically_normal();
    const fs::path b = fs::absolute(base).lexically_normal();
    const fs::path r = a.lexically_relative(b);
    return (r.empty() ? a : r).generic_string();
}

std::size_t arch_index(const std::string& name) {
    if (name == "snet") return 0;
    if (name == "unet") return 1;
    throw ConfigError("arch", "expected 'snet' or 'unet', got '" + name + "'");
}

std::vector<nn::Example<float>> load_pairs(const fs::path& inputs, const fs::path& targets) {
    std::vector<nn::Example<float>> set;
    for (const auto& in : list_files(inputs, ".pati")) {
        const fs::path tgt = targets / in.filename();
        if (!fs::exists(tgt)) throw IoError(tgt.string(), "no target image for " + in.filename().string());
        set.push_back({nn::to_tensor<float>(read_image(in)), nn::to_tensor<float>(read_image(tgt))});
    }
    if (set.empty()) throw IoError(inputs.string(), "no .pati images found");
    return set;
}

std::string csv_number(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

void PipelineConfig::validate() const {
    require(width >= 2 && height >= 2, "grid", "width and height must be >= 2");
    require(std::isfinite(extent.x_min) && std::isfinite(extent.x_max) && extent.x_max > extent.x_min, "extent",
            "x_max must exceed x_min");
    require(std::isfinite(extent.y_min) && std::isfinite(extent.y_max) && extent.y_max > extent.y_min, "extent",
            "y_max must exceed y_min");
    require(radius > 0.0 && std::isfinite(radius), "radius", "must be > 0");
    require(detectors >= 2, "detectors", "need at least 2");
    require(arc == "lower" || arc == "full" || arc == "angles", "arc", "expected lower, full or angles");
    if (arc == "lower") require(std::abs(arc_y_cut) < radius, "arc_y_cut", "must satisfy |y_cut| < radius");
    if (arc == "angles") {
        require(theta_start < theta_end && theta_end - theta_start <= 2.0 * std::numbers::pi + 1e-12, "theta_end",
                "need theta_start < theta_end <= theta_start + 2 pi");
    }
    require(samples >= 3, "samples", "need at least 3 time samples");
    require(t_max > 0.0 && std::isfinite(t_max), "t_max", "must be > 0");
    require(angular_points >= 16, "angular_points", "must be >= 16");
    require(noise_level >= 0.0 && std::isfinite(noise_level), "noise_level", "must be >= 0");
    require(noise_reference == "std" || noise_reference == "maxabs", "noise_reference", "expected std or maxabs");
    require(fbp_t_end >= 0.0 && fbp_t_end <= t_max + 1e-9, "fbp_t_end",
            "must lie in [0, t_max] (0 selects the full record)");
    require(tv_lambda >= 0.0, "tv_lambda", "must be >= 0");
    require(tv_iterations >= 1, "tv_iterations", "must be >= 1");
    require(train_count >= 1, "train_count", "must be >= 1");
    require(eval_count >= 1, "eval_count", "must be >= 1");
    require(learning_rate > 0.0, "learning_rate", "must be > 0");
    require(momentum >= 0.0 && momentum < 1.0, "momentum", "must lie in [0, 1)");
    require(batch_size >= 1, "batch_size", "must be >= 1");
    require(unet_depth >= 1 && unet_depth <= 8, "unet_depth", "must lie in [1, 8]");
    require(unet_base >= 1, "unet_base", "must be >= 1");
    const std::size_t div = std::size_t(1) << unet_depth;
    require(width % div == 0 && height % div == 0, "unet_depth",
            "grid size must be divisible by 2^unet_depth = " + std::to_string(div));
    // The forward operator needs every detector's t_max-circle to cover the extent.
    const SensorGeometry g = geometry();
    for (const Point& s : g.positions()) {
        require(max_distance(s, extent) <= t_max, "t_max",
                "record too short: the wave from the far corner of the extent does not reach a detector by t_max");
    }
}

PipelineConfig PipelineConfig::desk() { return PipelineConfig{}; }

PipelineConfig PipelineConfig::full() {
    PipelineConfig c;
    c.width = 128;
    c.height = 128;
    c.samples = 2963;
    c.train_count = 1000;
    c.eval_count = 200;
    return c;
}

SensorGeometry PipelineConfig::geometry() const {
    if (arc == "full") return make_full_circle(radius, detectors);
    if (arc == "angles") return make_arc_geometry(radius, detectors, theta_start, theta_end);
    return make_lower_arc(radius, detectors, arc_y_cut);
}

ForwardConfig PipelineConfig::forward_config() const {
    ForwardConfig f;
    f.angular_points = angular_points;
    return f;
}

NoiseReference PipelineConfig::noise_ref() const {
    return noise_reference == "maxabs" ? NoiseReference::MaxAbs : NoiseReference::StdDev;
}

TvConfig PipelineConfig::tv_config() const {
    TvConfig t;
    t.lambda = tv_lambda;
    t.iterations = tv_iterations;
    t.nonnegative = tv_nonnegative;
    return t;
}

nn::TrainConfig PipelineConfig::train_config() const {
    nn::TrainConfig t;
    t.learning_rate = learning_rate;
    t.momentum = momentum;
    t.batch_size = batch_size;
    t.sweeps = sweeps;
    t.seed = Seed{seed};
    return t;
}

nn::Architecture PipelineConfig::architecture(const std::string& name) const {
    return arch_index(name) == 0 ? nn::Architecture::snet(snet_residual)
                                 : nn::Architecture::unet(unet_depth, unet_base, unet_residual);
}

std::string PipelineConfig::to_json() const {
    json j;
    j["width"] = width;
    j["height"] = height;
    j["x_min"] = extent.x_min;
    j["x_max"] = extent.x_max;
    j["y_min"] = extent.y_min;
    j["y_max"] = extent.y_max;
    j["radius"] = radius;
    j["detectors"] = detectors;
    j["arc"] = arc;
    j["arc_y_cut"] = arc_y_cut;
    j["theta_start"] = theta_start;
    j["theta_end"] = theta_end;
    j["samples"] = samples;
    j["t_max"] = t_max;
    j["angular_points"] = angular_points;
    j["noise_level"] = noise_level;
    j["noise_reference"] = noise_reference;
    j["fbp_t_end"] = fbp_t_end;
    j["tv_lambda"] = tv_lambda;
    j["tv_iterations"] = tv_iterations;
    j["tv_nonnegative"] = tv_nonnegative;
    j["train_count"] = train_count;
    j["eval_count"] = eval_count;
    j["learning_rate"] = learning_rate;
    j["momentum"] = momentum;
    j["batch_size"] = batch_size;
    j["sweeps"] = sweeps;
    j["snet_residual"] = snet_residual;
    j["unet_depth"] = unet_depth;
    j["unet_base"] = unet_base;
    j["unet_residual"] = unet_residual;
    j["seed"] = seed;
    return j.dump();
}

std::uint64_t PipelineConfig::hash() const { return fnv1a(to_json()); }

std::string provenance_json(const std::string& stage, const PipelineConfig& cfg, const std::vector<fs::path>& inputs,
                            const fs::path& base_dir) {
    json j;
    j["stage"] = stage;
    j["toolkit_version"] = kToolkitVersion;
    j["config_hash"] = hex(cfg.hash());
    j["seed"] = cfg.seed;
    j["config"] = json::parse(cfg.to_json());
    json in = json::array();
    for (const auto& p : inputs) in.push_back(relative_to(p, base_dir));
    j["inputs"] = in;
    return j.dump(2) + "\n";
}

void write_provenance(const fs::path& dir, const std::string& stage, const PipelineConfig& cfg,
                      const std::vector<fs::path>& inputs) {
    ensure_dir(dir);
    write_text(dir / "provenance.json", provenance_json(stage, cfg, inputs, dir));
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError(dir.string(), "not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir, ec)) {
        if (e.is_regular_file() && e.path().extension() == extension) files.push_back(e.path());
    }
    if (ec) throw IoError(dir.string(), ec.message());
    std::sort(files.begin(), files.end());
    return files;
}

void stage_generate(const PipelineConfig& cfg, const std::string& set, const fs::path& out_dir, const Logger& log) {
    cfg.validate();
    if (set != "train" && set != "eval") throw ConfigError("set", "expected 'train' or 'eval', got '" + set + "'");
    const bool train = set == "train";
    const std::size_t count = train ? cfg.train_count : cfg.eval_count;
    say(log, "generating " + std::to_string(count) + " " + set + " phantoms in " + out_dir.string());
    ensure_dir(out_dir);
    generate_dataset(count, Seed{cfg.seed}, train ? kTrainStream : kEvalStream, out_dir, cfg.grid(), {});
    write_provenance(out_dir, "generate-data", cfg, {});
}

Sinogram simulate_one(const PipelineConfig& cfg, const GridImage& phantom, Seed noise_seed) {
    const WaveOperator op(phantom, cfg.geometry(), cfg.samples, cfg.dt(), cfg.forward_config());
    return add_noise(op.forward(phantom), cfg.noise_level, noise_seed, cfg.noise_ref());
}

void stage_simulate(const PipelineConfig& cfg, const fs::path& in_dir, const fs::path& out_dir, const Logger& log) {
    cfg.validate();
    const auto files = list_files(in_dir, ".pati");
    std::optional<DatasetManifest> manifest;
    if (fs::exists(in_dir / kManifestName)) manifest = read_manifest(in_dir / kManifestName);
    ensure_dir(out_dir);
    std::optional<WaveOperator> op;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const GridImage phantom = read_image(files[i]);
        if (!op || phantom.width() != op->grid_template().width() || phantom.height() != op->grid_template().height() ||
            !(phantom.extent() == op->grid_template().extent())) {
            op.emplace(phantom, cfg.geometry(), cfg.samples, cfg.dt(), cfg.forward_config());
        }
        Seed noise{derive_seed(Seed{cfg.seed}, kNoiseStream, i)};
        if (manifest) {
            const std::string name = files[i].filename().string();
            for (const auto& e : manifest->entries) {
                if (e.file == name) noise = derive_seed(e.spec.seed, kNoiseStream, 0);
            }
        }
        const Sinogram y = add_noise(op->forward(phantom), cfg.noise_level, noise, cfg.noise_ref());
        write_sinogram(out_dir / files[i].filename().replace_extension(".pats"), y);
        if ((i + 1) % 50 == 0 || i + 1 == files.size()) {
            say(log, "simulated " + std::to_string(i + 1) + "/" + std::to_string(files.size()));
        }
    }
    write_provenance(out_dir, "simulate", cfg, {in_dir});
}

void stage_fbp(const PipelineConfig& cfg, const fs::path& in_dir, const fs::path& out_dir, const Logger& log) {
    cfg.validate();
    const auto files = list_files(in_dir, ".pats");
    ensure_dir(out_dir);
    const GridImage grid = cfg.grid();
    FbpConfig fc;
    fc.t_end = cfg.fbp_t_end;
    std::optional<FbpOperator> op;
    std::optional<SensorGeometry> geom;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const Sinogram y = read_sinogram(files[i]);
        if (!geom || !(*geom == y.geometry()) || y.samples() != cfg.samples) {
            geom = y.geometry();
            op.emplace(grid, y.geometry(), y.samples(), y.dt(), fc);
            if (!op->covers_extent()) say(log, "warning: t_end circles do not cover the whole extent");
        }
        write_image(out_dir / files[i].filename().replace_extension(".pati"), op->apply(y));
    }
    say(log, "fbp: reconstructed " + std::to_string(files.size()) + " images");
    write_provenance(out_dir, "reconstruct-fbp", cfg, {in_dir});
}

void stage_tv(const PipelineConfig& cfg, const fs::path& in_dir, const fs::path& out_dir, const Logger& log) {
    cfg.validate();
    const auto files = list_files(in_dir, ".pats");
    ensure_dir(out_dir / "objective");
    const GridImage grid = cfg.grid();
    FbpConfig fc;
    fc.t_end = cfg.fbp_t_end;
    TvConfig tc = cfg.tv_config();
    std::optional<WaveOperator> op;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const Sinogram y = read_sinogram(files[i]);
        if (!op || !(op->geometry() == y.geometry()) || op->samples() != y.samples()) {
            op.emplace(grid, y.geometry(), y.samples(), y.dt(), cfg.forward_config());
            tc.opnorm = estimate_opnorm(stack(wave_map(*op), gradient_map(grid)), tc.opnorm_iters);
            say(log, "tv: operator norm estimate " + csv_number(tc.opnorm));
        }
        const TvResult r = tv_reconstruct(*op, y, tc, fc);
        const fs::path name = files[i].filename().replace_extension(".pati");
        write_image(out_dir / name, r.image);
        std::string csv = "iter,data_term,tv_term,total\n";
        for (const auto& c : r.history) {
            csv += std::to_string(c.iteration) + "," + csv_number(c.data_term) + "," + csv_number(c.tv_term) + "," +
                   csv_number(c.total) + "\n";
        }
        write_text(out_dir / "objective" / fs::path(name).replace_extension(".csv"), csv);
        if ((i + 1) % 10 == 0 || i + 1 == files.size()) {
            say(log, "tv: " + std::to_string(i + 1) + "/" + std::to_string(files.size()));
        }
    }
    write_provenance(out_dir, "reconstruct-tv", cfg, {in_dir});
}

void stage_train(const PipelineConfig& cfg, const std::string& arch_name, const TrainPaths& paths,
                 const fs::path& out_dir, const Logger& log) {
    cfg.validate();
    const nn::Architecture arch = cfg.architecture(arch_name);
    const std::size_t idx = arch_index(arch_name);
    const auto train_set = load_pairs(paths.inputs, paths.targets);
    std::vector<nn::Example<float>> eval_set;
    if (!paths.eval_inputs.empty()) eval_set = load_pairs(paths.eval_inputs, paths.eval_targets);
    nn::TrainConfig tc = cfg.train_config();
    tc.seed = derive_seed(Seed{cfg.seed}, kShuffleStream, idx);
    say(log, "train " + arch.tag() + ": " + std::to_string(train_set.size()) + " examples, " +
                 std::to_string(tc.sweeps) + " sweeps");
    auto net = nn::init_network<float>(arch, derive_seed(Seed{cfg.seed}, kInitStream, idx));
    auto result = nn::train(std::move(net), train_set, eval_set, tc, [&](const nn::SweepRecord& r) {
        say(log, arch_name + " sweep " + std::to_string(r.sweep) + ": train L1 " + csv_number(r.train_l1) +
                     ", eval L1 " + csv_number(r.eval_l1));
    });
    ensure_dir(out_dir);
    nn::save_params(out_dir / (arch_name + ".patw"), result.net);
    write_text(out_dir / (arch_name + "_loss.csv"), nn::history_csv(result.history));
    std::vector<fs::path> inputs{paths.inputs, paths.targets};
    if (!paths.eval_inputs.empty()) {
        inputs.push_back(paths.eval_inputs);
        inputs.push_back(paths.eval_targets);
    }
    write_provenance(out_dir, "train-" + arch_name, cfg, inputs);
}

void stage_cnn(const fs::path& checkpoint, const fs::path& in_dir, const fs::path& out_dir,
               const PipelineConfig& cfg, const Logger& log) {
    const auto net = nn::convert<float>(nn::load_params<double>(checkpoint));
    const auto files = list_files(in_dir, ".pati");
    ensure_dir(out_dir);
    for (const auto& f : files) {
        const GridImage in = read_image(f);
        write_image(out_dir / f.filename(), nn::to_image(nn::forward(net, nn::to_tensor<float>(in)), in));
    }
    say(log, net.arch.tag() + ": reconstructed " + std::to_string(files.size()) + " images");
    write_provenance(out_dir, "reconstruct-cnn", cfg, {checkpoint, in_dir});
}

EvalReport stage_evaluate(const fs::path& truth_dir, const std::vector<MethodDir>& methods, const fs::path& out_dir,
                          const PipelineConfig& cfg, long profile_row, const Logger& log) {
    if (methods.empty()) throw ConfigError("method", "at least one reconstruction directory is required");
    const auto truths = list_files(truth_dir, ".pati");
    if (truths.empty()) throw IoError(truth_dir.string(), "no .pati images found");
    EvalReport report;
    std::vector<GridImage> truth_images;
    for (const auto& t : truths) {
        report.images.push_back(t.stem().string());
        truth_images.push_back(read_image(t));
    }
    std::optional<DatasetManifest> manifest;
    if (fs::exists(truth_dir / kManifestName)) {
        manifest = read_manifest(truth_dir / kManifestName);
        report.manifests.push_back(relative_to(truth_dir / kManifestName, out_dir));
    }
    std::vector<GridImage> first;  // first image of every method, for the profiles
    for (const auto& m : methods) {
        MethodScores s;
        s.name = m.name;
        for (std::size_t i = 0; i < truths.size(); ++i) {
            const GridImage rec = read_image(m.dir / truths[i].filename());
            s.rel_mse.push_back(rel_mse(truth_images[i], rec));
            if (i == 0) first.push_back(rec);
        }
        report.add(std::move(s));
    }
    ensure_dir(out_dir);
    write_text(out_dir / "report.csv", report_csv(report));
    write_text(out_dir / "report.txt", report_text(report));

    const GridImage& truth0 = truth_images.front();
    std::size_t row = truth0.height() / 2;
    if (profile_row >= 0) {
        row = static_cast<std::size_t>(profile_row);
        if (row >= truth0.height()) throw ConfigError("profile_row", "outside the image");
    } else if (manifest && !manifest->entries.empty()) {
        const std::string name = truths.front().filename().string();
        for (const auto& e : manifest->entries) {
            if (e.file != name || e.spec.rings.empty()) continue;
            double top = e.spec.rings.front().center.y;
            for (const auto& r : e.spec.rings) top = std::max(top, r.center.y);
            row = row_at(truth0, top);
        }
    }
    auto index_of = [&](const std::string& name) -> long {
        for (std::size_t i = 0; i < methods.size(); ++i)
            if (methods[i].name == name) return static_cast<long>(i);
        return -1;
    };
    const long fbp = index_of("fbp"), tv = index_of("tv");
    if (fbp >= 0 && tv >= 0) {
        for (std::size_t i = 0; i < methods.size(); ++i) {
            if (static_cast<long>(i) == fbp || static_cast<long>(i) == tv) continue;
            write_text(out_dir / ("profile_" + methods[i].name + ".csv"),
                       profile_csv(row, truth0, first[fbp], first[tv], first[i]));
        }
    }
    std::vector<fs::path> inputs{truth_dir};
    for (const auto& m : methods) inputs.push_back(m.dir);
    write_provenance(out_dir, "evaluate", cfg, inputs);
    say(log, report_text(report));
    return report;
}

EvalReport reproduce(const PipelineConfig& cfg, const fs::path& root, const Logger& log) {
    cfg.validate();
    for (const char* set : {"train", "eval"}) {
        stage_generate(cfg, set, root / "phantoms" / set, log);
        stage_simulate(cfg, root / "phantoms" / set, root / "sinograms" / set, log);
        stage_fbp(cfg, root / "sinograms" / set, root / "fbp" / set, log);
    }
    stage_tv(cfg, root / "sinograms" / "eval", root / "tv" / "eval", log);
    std::vector<MethodDir> methods{{"fbp", root / "fbp" / "eval"}, {"tv", root / "tv" / "eval"}};
    for (const char* arch : {"snet", "unet"}) {
        const TrainPaths paths{root / "fbp" / "train", root / "phantoms" / "train", root / "fbp" / "eval",
                               root / "phantoms" / "eval"};
        stage_train(cfg, arch, paths, root / "models", log);
        const fs::path out = root / "cnn" / arch;
        stage_cnn(root / "models" / (std::string(arch) + ".patw"), root / "fbp" / "eval", out, cfg, log);
        methods.push_back({arch, out});
    }
    return stage_evaluate(root / "phantoms" / "eval", methods, root / "report", cfg, -1, log);
}

}  // namespace pat
