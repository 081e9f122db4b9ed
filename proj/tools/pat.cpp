// pat: command-line front end for the reconstruction pipeline.

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pat/eval.hpp"
#include "pat/fbp.hpp"
#include "pat/io.hpp"
#include "pat/parallel.hpp"
#include "pat/pipeline.hpp"
#include "pat/tvmin.hpp"
#include "pat/version.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kConfig = 2, kIo = 3, kNumerical = 4, kOther = 1 };

// Every PipelineConfig key is a flag on the root command and a key in the
// config file. Options are parsed into `parsed`; afterwards only the ones
// that were actually given are copied onto the scale defaults.
class ConfigOptions {
public:
    explicit ConfigOptions(CLI::App& app) : app_(app) {}

    template <class T>
    CLI::Option* add(const std::string& names, T pat::PipelineConfig::*member, const std::string& help) {
        CLI::Option* opt = app_.add_option(names, parsed.*member, help)->capture_default_str();
        opt->group("Pipeline configuration");
        copiers_.push_back([opt, member](const pat::PipelineConfig& from, pat::PipelineConfig& to) {
            if (opt->count() > 0) to.*member = from.*member;
        });
        return opt;
    }

    void flag(const std::string& names, bool pat::PipelineConfig::*member, const std::string& help) {
        CLI::Option* opt = app_.add_flag(names, parsed.*member, help)->capture_default_str();
        opt->group("Pipeline configuration");
        copiers_.push_back([opt, member](const pat::PipelineConfig& from, pat::PipelineConfig& to) {
            if (opt->count() > 0) to.*member = from.*member;
        });
    }

    void extent(const std::string& names) {
        CLI::Option* opt = app_.add_option(names, extent_, "Image extent x_min,x_max,y_min,y_max in mm")
                               ->delimiter(',')
                               ->expected(4);
        opt->group("Pipeline configuration");
        copiers_.push_back([this, opt](const pat::PipelineConfig&, pat::PipelineConfig& to) {
            if (opt->count() > 0) to.extent = {extent_[0], extent_[1], extent_[2], extent_[3]};
        });
    }

    void grid(const std::string& names) {
        CLI::Option* opt = app_.add_option(names, grid_, "Grid size WxH (sets width and height)");
        opt->group("Pipeline configuration");
        copiers_.push_back([this, opt](const pat::PipelineConfig&, pat::PipelineConfig& to) {
            if (opt->count() == 0) return;
            const auto x = grid_.find('x');
            try {
                if (x == std::string::npos) throw std::invalid_argument("missing x");
                to.width = std::stoul(grid_.substr(0, x));
                to.height = std::stoul(grid_.substr(x + 1));
            } catch (const std::exception&) {
                throw pat::ConfigError("grid", "expected WxH, got '" + grid_ + "'");
            }
        });
    }

    pat::PipelineConfig resolve(const pat::PipelineConfig& base) const {
        pat::PipelineConfig out = base;
        for (const auto& c : copiers_) c(parsed, out);
        return out;
    }

    pat::PipelineConfig parsed;

private:
    CLI::App& app_;
    std::vector<double> extent_;
    std::string grid_;
    std::vector<std::function<void(const pat::PipelineConfig&, pat::PipelineConfig&)>> copiers_;
};

void register_config(ConfigOptions& o) {
    using C = pat::PipelineConfig;
    o.add("--width", &C::width, "Grid width in pixels");
    o.add("--height", &C::height, "Grid height in pixels");
    o.grid("--grid");
    o.extent("--extent");
    o.add("--radius", &C::radius, "Detector circle radius in mm");
    o.add("--detectors", &C::detectors, "Number of detectors M");
    o.add("--arc", &C::arc, "Detector arc: lower, full or angles")->check(CLI::IsMember({"lower", "full", "angles"}));
    o.add("--arc-y-cut", &C::arc_y_cut, "Lower arc keeps detectors with s_2 below this value (mm)");
    o.add("--theta-start", &C::theta_start, "Arc start angle (rad), for --arc angles");
    o.add("--theta-end", &C::theta_end, "Arc end angle (rad), for --arc angles");
    o.add("--samples", &C::samples, "Time samples N on [0, t_max]");
    o.add("--t-max", &C::t_max, "Final measurement time in mm");
    o.add("--angular-points", &C::angular_points, "Quadrature points per circle in the forward operator");
    o.add("--noise-level", &C::noise_level, "Relative Gaussian noise level");
    o.add("--noise-reference", &C::noise_reference, "Noise reference: std or maxabs")
        ->check(CLI::IsMember({"std", "maxabs"}));
    o.add("--t-end,--fbp-t-end", &C::fbp_t_end, "FBP truncation time in mm (0: full record)");
    o.add("--lambda,--tv-lambda", &C::tv_lambda, "TV regularization weight");
    o.add("--iters,--tv-iterations", &C::tv_iterations, "TV primal-dual iterations");
    o.flag("--tv-nonnegative", &C::tv_nonnegative, "Project TV iterates onto X >= 0");
    o.add("--train-count", &C::train_count, "Training phantoms");
    o.add("--eval-count", &C::eval_count, "Evaluation phantoms");
    o.add("--learning-rate", &C::learning_rate, "SGD learning rate");
    o.add("--momentum", &C::momentum, "SGD momentum");
    o.add("--batch-size", &C::batch_size, "Training batch size");
    o.add("--sweeps", &C::sweeps, "Training sweeps over the data");
    o.flag("--snet-residual", &C::snet_residual, "Add the input to the S-Net output");
    o.add("--unet-depth", &C::unet_depth, "U-Net pooling scales");
    o.add("--unet-base", &C::unet_base, "U-Net channels at the finest scale");
    o.flag("--unet-residual,!--no-unet-residual", &C::unet_residual, "Add the input to the U-Net output");
    o.add("--seed", &C::seed, "Master seed");
}

std::string provenance_path(const fs::path& file) { return file.string() + ".provenance.json"; }

pat::Logger stderr_logger(bool quiet) {
    if (quiet) return {};
    return [](const std::string& m) { std::cerr << m << '\n'; };
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Photoacoustic tomography reconstruction toolkit"};
    app.set_version_flag("--version", std::string(pat::kToolkitVersion));
    app.set_config("--config", "", "Read options from a TOML/INI file (command-line flags win)");
    app.require_subcommand(1);
    app.fallthrough();

    std::string scale = "desk";
    std::size_t threads = 0;
    bool quiet = false;
    app.add_option("--scale", scale, "Default parameter set: desk or full")
        ->check(CLI::IsMember({"desk", "full"}))
        ->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (0: hardware concurrency)");
    app.add_flag("-q,--quiet", quiet, "No progress output");
    ConfigOptions options(app);
    register_config(options);

    std::function<void(const pat::PipelineConfig&, const pat::Logger&)> run;

    // generate-data
    auto* gen = app.add_subcommand("generate-data", "Random ring phantoms plus manifest");
    std::string gen_set = "train";
    fs::path gen_out;
    gen->add_option("--set", gen_set, "train or eval (selects count and seed stream)")
        ->check(CLI::IsMember({"train", "eval"}))
        ->capture_default_str();
    gen->add_option("-o,--output", gen_out, "Output directory")->required();
    gen->callback([&] {
        run = [&](const pat::PipelineConfig& cfg, const pat::Logger& log) {
            pat::stage_generate(cfg, gen_set, gen_out, log);
        };
    });

    // simulate
    auto* sim = app.add_subcommand("simulate", "Noisy sinograms from phantoms (file or directory)");
    fs::path sim_in, sim_out;
    std::uint64_t noise_seed = 0;
    sim->add_option("-i,--input", sim_in, "Phantom .pati file or directory")->required();
    sim->add_option("-o,--output", sim_out, "Output .pats file or directory")->required();
    auto* noise_opt = sim->add_option("--noise-seed", noise_seed, "Noise seed for a single file");
    sim->callback([&] {
        run = [&](const pat::PipelineConfig& cfg, const pat::Logger& log) {
            if (fs::is_directory(sim_in)) return pat::stage_simulate(cfg, sim_in, sim_out, log);
            cfg.validate();
            const pat::Seed seed = noise_opt->count() ? pat::Seed{noise_seed}
                                                      : pat::derive_seed(pat::Seed{cfg.seed}, pat::kNoiseStream, 0);
            pat::write_sinogram(sim_out, pat::simulate_one(cfg, pat::read_image(sim_in), seed));
            pat::write_text(provenance_path(sim_out),
                            pat::provenance_json("simulate", cfg, {sim_in}, fs::absolute(sim_out).parent_path()));
        };
    });

    // reconstruct-fbp
    auto* fbp = app.add_subcommand("reconstruct-fbp", "Filtered back-projection");
    fs::path fbp_in, fbp_out;
    fbp->add_option("-s,--sinogram", fbp_in, "Sinogram .pats file or directory")->required();
    fbp->add_option("-o,--output", fbp_out, "Output .pati file or directory")->required();
    fbp->callback([&] {
        run = [&](const pat::PipelineConfig& cfg, const pat::Logger& log) {
            if (fs::is_directory(fbp_in)) return pat::stage_fbp(cfg, fbp_in, fbp_out, log);
            cfg.validate();
            const pat::Sinogram y = pat::read_sinogram(fbp_in);
            pat::FbpConfig fc;
            fc.t_end = cfg.fbp_t_end;
            pat::write_image(fbp_out, pat::fbp_reconstruct(y, cfg.grid(), fc));
            pat::write_text(provenance_path(fbp_out), pat::provenance_json("reconstruct-fbp", cfg, {fbp_in},
                                                                           fs::absolute(fbp_out).parent_path()));
        };
    });

    // reconstruct-tv
    auto* tv = app.add_subcommand("reconstruct-tv", "TV-regularized reconstruction (primal-dual)");
    fs::path tv_in, tv_out, tv_csv;
    tv->add_option("-s,--sinogram", tv_in, "Sinogram .pats file or directory")->required();
    tv->add_option("-o,--output", tv_out, "Output .pati file or directory")->required();
    tv->add_option("--objective-csv", tv_csv, "Objective history for a single file (default: <output>.csv)");
    tv->callback([&] {
        run = [&](const pat::PipelineConfig& cfg, const pat::Logger& log) {
            if (fs::is_directory(tv_in)) return pat::stage_tv(cfg, tv_in, tv_out, log);
            cfg.validate();
            const pat::Sinogram y = pat::read_sinogram(tv_in);
            const pat::WaveOperator op(cfg.grid(), y.geometry(), y.samples(), y.dt(), cfg.forward_config());
            pat::FbpConfig fc;
            fc.t_end = cfg.fbp_t_end;
            const pat::TvResult r = pat::tv_reconstruct(op, y, cfg.tv_config(), fc);
            pat::write_image(tv_out, r.image);
            std::ostringstream csv;
            csv.precision(12);
            csv << "iter,data_term,tv_term,total\n";
            for (const auto& c : r.history)
                csv << c.iteration << ',' << c.data_term << ',' << c.tv_term << ',' << c.total << '\n';
            pat::write_text(tv_csv.empty() ? fs::path(tv_out.string() + ".csv") : tv_csv, csv.str());
            pat::write_text(provenance_path(tv_out), pat::provenance_json("reconstruct-tv", cfg, {tv_in},
                                                                          fs::absolute(tv_out).parent_path()));
        };
    });

    // train
    auto* tr = app.add_subcommand("train", "Train S-Net or U-Net on (FBP, phantom) pairs");
    std::string arch = "snet";
    pat::TrainPaths paths;
    fs::path tr_out;
    tr->add_option("--arch", arch, "snet or unet")->check(CLI::IsMember({"snet", "unet"}))->capture_default_str();
    tr->add_option("--inputs", paths.inputs, "Directory of FBP images (training)")->required();
    tr->add_option("--targets", paths.targets, "Directory of ground-truth phantoms (training)")->required();
    auto* ei = tr->add_option("--eval-inputs", paths.eval_inputs, "Directory of FBP images (monitoring)");
    tr->add_option("--eval-targets", paths.eval_targets, "Directory of ground-truth phantoms (monitoring)")
        ->needs(ei);
    ei->needs("--eval-targets");
    tr->add_option("-o,--output", tr_out, "Output directory for <arch>.patw and <arch>_loss.csv")->required();
    tr->callback([&] {
        run = [&](const pat::PipelineConfig& cfg, const pat::Logger& log) {
            pat::stage_train(cfg, arch, paths, tr_out, log);
        };
    });

    // reconstruct-cnn
    auto* cnn = app.add_subcommand("reconstruct-cnn", "Apply a trained network to FBP images");
    fs::path model, cnn_in, cnn_out;
    cnn->add_option("-m,--model", model, "Checkpoint (.patw)")->required();
    cnn->add_option("-i,--input", cnn_in, "FBP .pati file or directory")->required();
    cnn->add_option("-o,--output", cnn_out, "Output .pati file or directory")->required();
    cnn->callback([&] {
        run = [&](const pat::PipelineConfig& cfg, const pat::Logger& log) {
            if (fs::is_directory(cnn_in)) return pat::stage_cnn(model, cnn_in, cnn_out, cfg, log);
            const auto net = pat::nn::convert<float>(pat::nn::load_params<double>(model));
            const pat::GridImage in = pat::read_image(cnn_in);
            pat::write_image(cnn_out,
                             pat::nn::to_image(pat::nn::forward(net, pat::nn::to_tensor<float>(in)), in));
            pat::write_text(provenance_path(cnn_out), pat::provenance_json("reconstruct-cnn", cfg, {model, cnn_in},
                                                                           fs::absolute(cnn_out).parent_path()));
        };
    });

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Relative MSE report and cross-section profiles");
    fs::path truth, ev_out;
    std::vector<std::string> method_args;
    long profile_row = -1;
    ev->add_option("-t,--truth", truth, "Ground-truth .pati file or directory")->required();
    ev->add_option("-m,--method", method_args, "name=path of a reconstruction file or directory (repeatable)")
        ->required();
    ev->add_option("-o,--output", ev_out, "Report directory")->required();
    ev->add_option("--profile-row", profile_row, "Cross-section row (default: through the topmost ring)");
    ev->callback([&] {
        run = [&](const pat::PipelineConfig& cfg, const pat::Logger& log) {
            std::vector<pat::MethodDir> methods;
            for (const auto& m : method_args) {
                const auto eq = m.find('=');
                if (eq == std::string::npos || eq == 0) {
                    throw pat::ConfigError("method", "expected name=path, got '" + m + "'");
                }
                methods.push_back({m.substr(0, eq), m.substr(eq + 1)});
            }
            if (fs::is_directory(truth)) {
                pat::stage_evaluate(truth, methods, ev_out, cfg, profile_row, log);
                return;
            }
            const pat::GridImage t = pat::read_image(truth);
            pat::EvalReport report;
            report.images.push_back(truth.stem().string());
            for (const auto& m : methods) report.add({m.name, {pat::rel_mse(t, pat::read_image(m.dir))}});
            std::vector<fs::path> inputs{truth};
            for (const auto& m : methods) inputs.push_back(m.dir);
            pat::write_provenance(ev_out, "evaluate", cfg, inputs);
            pat::write_text(ev_out / "report.csv", pat::report_csv(report));
            pat::write_text(ev_out / "report.txt", pat::report_text(report));
            if (log) log(pat::report_text(report));
        };
    });

    // reproduce-paper
    auto* rep = app.add_subcommand("reproduce-paper", "Run every stage with the selected scale's defaults");
    fs::path rep_out;
    rep->add_option("-o,--output", rep_out, "Root directory for all artifacts")->required();
    rep->callback([&] {
        run = [&](const pat::PipelineConfig& cfg, const pat::Logger& log) { pat::reproduce(cfg, rep_out, log); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (threads > 0) pat::set_thread_count(threads);
        const pat::PipelineConfig base = scale == "full" ? pat::PipelineConfig::full() : pat::PipelineConfig::desk();
        const pat::PipelineConfig cfg = options.resolve(base);
        run(cfg, stderr_logger(quiet));
        return kOk;
    } catch (const pat::InvalidArgument& e) {
        std::cerr << "pat: configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const pat::IoError& e) {
        std::cerr << "pat: I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const pat::DecodeError& e) {
        std::cerr << "pat: I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const pat::NumericalError& e) {
        std::cerr << "pat: numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "pat: error: " << e.what() << '\n';
        return kOther;
    }
}
