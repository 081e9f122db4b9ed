// Acceptance suite: one PASS/FAIL line per criterion.
//
//   pat_acceptance [--work DIR] [--only 1,2,...] [--reuse]
//
// Criteria 6, 7, 8 and 10 share two end-to-end runs of the command-line tool
// (desk scale, default seed) under DIR/run_a and DIR/run_b. --reuse keeps
// existing runs instead of regenerating them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/fdtd.hpp"
#include "oracles/gradcheck.hpp"
#include "oracles/subgradient.hpp"
#include "pat/fbp.hpp"
#include "pat/io.hpp"
#include "pat/nn/network.hpp"
#include "pat/parallel.hpp"
#include "pat/phantom.hpp"
#include "pat/pipeline.hpp"
#include "pat/tvmin.hpp"
#include "pat/wave.hpp"

#ifndef PAT_CLI_PATH
#error "PAT_CLI_PATH must point at the pat executable"
#endif

using namespace pat;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rel_mse_of(const GridImage& truth, const GridImage& recon) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = recon.values()[i] - truth.values()[i];
        num += d * d;
        den += truth.values()[i] * truth.values()[i];
    }
    return num / den;
}

double rel_l2(std::span<const double> a, std::span<const double> b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

GridImage smooth_ring(std::size_t w, std::size_t h, Extent e) {
    RingSpec ring;
    ring.center = {0.0, -7.5};
    ring.radius = 4.0;
    ring.width = 2.0;
    ring.magnitude = 1.0;
    ring.blur_sigma = 0.2;
    ring.decay_rate = 0.2;
    return render_ring(ring, GridImage(w, h, e));
}

// ---------------------------------------------------------------------------

Outcome adjoint_test() {
    const auto t0 = Clock::now();
    const GridImage grid(64, 64, kDefaultExtent);
    const SensorGeometry g = make_lower_arc(50.0, 16, -11.1);
    const std::size_t n = 512;
    const WaveOperator op(grid, g, n, 67.3 / (n - 1));
    Rng rng(Seed{0xad10});
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        GridImage x = grid.zeros_like();
        for (double& v : x.values()) v = rng.uniform(-1.0, 1.0);
        Sinogram y(g, n, op.dt());
        for (double& v : y.values()) v = rng.uniform(-1.0, 1.0);
        const Sinogram ax = op.forward(x);
        const GridImage aty = op.adjoint(y);
        const double gap = std::abs(dot(ax.values(), y.values()) - dot(x.values(), aty.values()));
        worst = std::max(worst, gap / (norm2(ax.values()) * norm2(y.values())));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-6 && secs < 120.0, fmt("worst mismatch %.2e over 20 pairs, %.1f s", worst, secs)};
}

Outcome forward_fidelity() {
    const double sigma = 1.5;
    const auto p0 = [&](double x, double y) { return std::exp(-(x * x + y * y) / (2 * sigma * sigma)); };
    const Extent e{-10.0, 10.0, -10.0, 10.0};
    const SensorGeometry geom = make_full_circle(15.0, 8);
    auto discrepancy = [&](std::size_t w, double h, std::size_t points) {
        GridImage img(w, w, e);
        for (std::size_t r = 0; r < w; ++r)
            for (std::size_t c = 0; c < w; ++c) {
                const Point p = img.center_of(c, r);
                img.at(c, r) = p0(p.x, p.y);
            }
        oracle::FdtdSetup setup;
        setup.spacing = h;
        setup.half_width = 44.0;
        double dt = 0.0;
        const auto traces = oracle::fdtd_traces(p0, geom.positions(), 40.0, setup, &dt);
        ForwardConfig cfg;
        cfg.angular_points = points;
        const std::size_t n = traces[0].size();
        const Sinogram y = WaveOperator(img, geom, n, dt, cfg).forward(img);
        std::vector<double> ref;
        for (const auto& t : traces) ref.insert(ref.end(), t.begin(), t.end());
        return rel_l2(y.values(), ref);
    };
    const double base = discrepancy(64, 0.1, 4096);
    const double refined = discrepancy(128, 0.05, 8192);
    return {base <= 0.02 && refined <= 0.01,
            fmt("64x64: %.3f%%, refined 128x128: %.3f%%", 100 * base, 100 * refined)};
}

double full_view_error(const GridImage& truth) {
    const SensorGeometry g = make_full_circle(50.0, 256);
    const double dt = 0.05;
    const std::size_t n = 2001;  // t in [0, 100]
    return rel_mse_of(truth, fbp_reconstruct(forward(truth, g, n, dt), truth));
}

Outcome fbp_full_view(double& full_err) {
    const GridImage truth = smooth_ring(128, 128, kDefaultExtent);
    full_err = full_view_error(truth);
    return {full_err < 0.02, fmt("relMSE %.4f (M=256, dt=0.05, t<=100, 128x128)", full_err)};
}

Outcome limited_view(double full_err) {
    const GridImage truth = smooth_ring(128, 128, kDefaultExtent);
    const PipelineConfig cfg = PipelineConfig::full();
    const Sinogram y = forward(truth, cfg.geometry(), cfg.samples, cfg.dt(), cfg.forward_config());
    const double arc_err = rel_mse_of(truth, fbp_reconstruct(y, truth));
    const double ratio = arc_err / full_err;
    return {ratio >= 5.0, fmt("arc relMSE %.4f = %.1fx the full-view %.4f", arc_err, ratio, full_err)};
}

// ---------------------------------------------------------------------------

using nn::ConvParams;
using nn::Tensor;

Tensor<double> rand_tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, Rng& rng) {
    Tensor<double> t(n, c, h, w);
    for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
    return t;
}

double inner(const Tensor<double>& a, const Tensor<double>& b) {
    return std::inner_product(a.values().begin(), a.values().end(), b.values().begin(), 0.0);
}

std::vector<std::size_t> every(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

std::vector<double> vec(const Tensor<double>& t) { return {t.values().begin(), t.values().end()}; }

Tensor<double> like(const Tensor<double>& t, const std::vector<double>& v) {
    Tensor<double> out(t.n(), t.c(), t.h(), t.w());
    std::copy(v.begin(), v.end(), out.data());
    return out;
}

// Input-gradient check of a layer f with backward b, through <f(x), g>.
double layer_check(const Tensor<double>& x, const std::function<Tensor<double>(const Tensor<double>&)>& f,
                   const std::function<Tensor<double>(const Tensor<double>&, const Tensor<double>&)>& b, Rng& rng) {
    const Tensor<double> y = f(x);
    const Tensor<double> g = rand_tensor(y.n(), y.c(), y.h(), y.w(), rng);
    return oracle::check_gradient([&](const std::vector<double>& v) { return inner(f(like(x, v)), g); }, vec(x),
                                  vec(b(x, g)), every(x.size()))
        .rel_error;
}

double network_check(const nn::Architecture& arch, std::size_t size, std::size_t samples_per_layer) {
    Rng rng(Seed{0x9c});
    nn::Network<double> net = nn::init_network<double>(arch, Seed{0x9d});
    for (auto& l : net.layers)
        for (double& b : l.bias) b = rng.uniform(-0.1, 0.1);
    const Tensor<double> x = rand_tensor(1, 1, size, size, rng);
    const Tensor<double> g = rand_tensor(1, 1, size, size, rng);
    nn::Tape<double> tape;
    nn::forward_train(net, x, tape);
    nn::Network<double> grad = nn::make_network<double>(arch);
    Tensor<double> dx;
    nn::backward<double>(net, tape, g, grad, &dx);

    // Parameter indices: all of them, or a fixed sample of every kernel plus all biases.
    std::vector<std::size_t> idx;
    if (samples_per_layer == 0) {
        idx = every(net.param_count());
    } else {
        const auto shapes = nn::layer_shapes(arch);
        std::size_t offset = 0;
        std::vector<std::size_t> kstart;
        for (const auto& s : shapes) {
            kstart.push_back(offset);
            offset += s.c_out * s.c_in * s.k * s.k;
        }
        for (std::size_t l = 0; l < shapes.size(); ++l) {
            const std::size_t nk = shapes[l].c_out * shapes[l].c_in * shapes[l].k * shapes[l].k;
            for (std::size_t t = 0; t < samples_per_layer; ++t) idx.push_back(kstart[l] + rng.uniform_index(nk));
        }
        for (std::size_t i = offset; i < net.param_count(); ++i) idx.push_back(i);
    }
    // A step of 1e-6 keeps every probe on one side of the ReLU and pooling switches.
    constexpr double h = 1e-6;
    const double by_param = oracle::check_gradient(
                                [&](const std::vector<double>& w) {
                                    nn::Network<double> n = net;
                                    n.unflatten(w);
                                    return inner(nn::forward(n, x), g);
                                },
                                net.flatten(), grad.flatten(), idx, h)
                                .rel_error;
    const double by_input =
        oracle::check_gradient([&](const std::vector<double>& v) { return inner(nn::forward(net, like(x, v)), g); },
                               vec(x), vec(dx), every(x.size()), h)
            .rel_error;
    return std::max(by_param, by_input);
}

Outcome gradient_checks() {
    const auto t0 = Clock::now();
    Rng rng(Seed{0x6c});
    std::vector<std::pair<std::string, double>> errs;

    {
        const Tensor<double> x = rand_tensor(2, 3, 6, 7, rng);
        ConvParams<double> p(4, 3, 3);
        for (double& v : p.kernel) v = rng.uniform(-0.5, 0.5);
        for (double& v : p.bias) v = rng.uniform(-0.5, 0.5);
        const Tensor<double> g = rand_tensor(2, 4, 6, 7, rng);
        ConvParams<double> grad(4, 3, 3);
        Tensor<double> dx;
        nn::conv2d_backward(x, p, g, grad, &dx);
        const double dk = oracle::check_gradient(
                              [&](const std::vector<double>& k) {
                                  ConvParams<double> q = p;
                                  q.kernel = k;
                                  return inner(nn::conv2d_forward(x, q), g);
                              },
                              p.kernel, grad.kernel, every(p.kernel.size()))
                              .rel_error;
        const double db = oracle::check_gradient(
                              [&](const std::vector<double>& b) {
                                  ConvParams<double> q = p;
                                  q.bias = b;
                                  return inner(nn::conv2d_forward(x, q), g);
                              },
                              p.bias, grad.bias, every(p.bias.size()))
                              .rel_error;
        const double din =
            oracle::check_gradient([&](const std::vector<double>& v) { return inner(nn::conv2d_forward(like(x, v), p), g); },
                                   vec(x), vec(dx), every(x.size()))
                .rel_error;
        errs.emplace_back("conv", std::max({dk, db, din}));
    }
    {
        Tensor<double> x = rand_tensor(1, 2, 6, 6, rng);
        for (double& v : x.values())
            if (std::abs(v) < 0.05) v = 0.2;
        errs.emplace_back("relu", layer_check(x, nn::relu_forward<double>, nn::relu_backward<double>, rng));
    }
    errs.emplace_back("maxpool", layer_check(rand_tensor(1, 2, 6, 8, rng), nn::maxpool2_forward<double>,
                                             nn::maxpool2_backward<double>, rng));
    errs.emplace_back("upsample",
                      layer_check(
                          rand_tensor(1, 2, 3, 4, rng), nn::upsample2_forward<double>,
                          [](const Tensor<double>&, const Tensor<double>& g) { return nn::upsample2_backward(g); }, rng));
    {
        const Tensor<double> b = rand_tensor(1, 2, 4, 4, rng);
        errs.emplace_back(
            "concat",
            layer_check(
                rand_tensor(1, 3, 4, 4, rng), [&](const Tensor<double>& a) { return nn::concat_forward(a, b); },
                [](const Tensor<double>&, const Tensor<double>& g) { return nn::concat_backward(g, 3).first; }, rng));
    }
    {
        Tensor<double> pred = rand_tensor(1, 1, 5, 5, rng);
        const Tensor<double> target = rand_tensor(1, 1, 5, 5, rng);
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (std::abs(pred.data()[i] - target.data()[i]) < 0.05) pred.data()[i] += 0.2;
        Tensor<double> dy;
        nn::l1_loss(pred, target, &dy);
        errs.emplace_back(
            "l1", oracle::check_gradient([&](const std::vector<double>& v) { return nn::l1_loss(like(pred, v), target); },
                                         vec(pred), vec(dy), every(pred.size()))
                      .rel_error);
    }
    errs.emplace_back("snet", network_check(nn::Architecture::snet(), 10, 60));
    errs.emplace_back("unet-d1", network_check(nn::Architecture::unet(1, 4, true), 16, 0));

    bool ok = true;
    std::string detail;
    for (const auto& [name, e] : errs) {
        ok = ok && e < 1e-4;
        detail += fmt("%s %.1e, ", name.c_str(), e);
    }
    const double secs = seconds_since(t0);
    ok = ok && secs < 300.0;
    return {ok, detail + fmt("%.1f s", secs)};
}

// ---------------------------------------------------------------------------

struct Runs {
    fs::path a, b;
    double seconds_a = 0.0;
    bool ok = false;
    std::string error;
};

Runs make_runs(const fs::path& work, bool reuse) {
    Runs r{work / "run_a", work / "run_b"};
    for (const fs::path* dir : {&r.a, &r.b}) {
        const bool done = fs::exists(*dir / "report" / "report.csv");
        if (reuse && done) continue;
        fs::remove_all(*dir);
        const std::string cmd = std::string("\"") + PAT_CLI_PATH + "\" --scale desk -q reproduce-paper -o \"" +
                                dir->string() + "\"";
        std::printf("running: %s\n", cmd.c_str());
        std::fflush(stdout);
        const auto t0 = Clock::now();
        const int rc = std::system(cmd.c_str());
        if (dir == &r.a) r.seconds_a = seconds_since(t0);
        if (rc != 0) {
            r.error = "reproduce-paper exited with status " + std::to_string(rc);
            return r;
        }
    }
    r.ok = true;
    return r;
}

std::vector<GridImage> read_dir(const fs::path& dir) {
    std::vector<GridImage> out;
    for (const auto& p : list_files(dir, ".pati")) out.push_back(read_image(p));
    return out;
}

double mean_error(const std::vector<GridImage>& truth, const std::vector<GridImage>& recon) {
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) s += rel_mse_of(truth[i], recon[i]);
    return s / static_cast<double>(truth.size());
}

Outcome learning_efficacy(const Runs& runs) {
    if (!runs.ok) return {false, runs.error};
    const auto truth = read_dir(runs.a / "phantoms" / "eval");
    const double fbp = mean_error(truth, read_dir(runs.a / "fbp" / "eval"));
    const double snet = mean_error(truth, read_dir(runs.a / "cnn" / "snet"));
    const double unet = mean_error(truth, read_dir(runs.a / "cnn" / "unet"));
    const bool timed = runs.seconds_a > 0.0;
    const bool ok = snet <= 0.5 * fbp && unet <= 0.5 * fbp && unet <= snet && (!timed || runs.seconds_a < 7200.0);
    std::string d = fmt("mean relMSE on %zu eval images: fbp %.4f, snet %.4f (%.2fx), unet %.4f (%.2fx)",
                        truth.size(), fbp, snet, snet / fbp, unet, unet / fbp);
    d += timed ? fmt(", run %.0f s", runs.seconds_a) : std::string(", reused run");
    return {ok, d};
}

double tiny_instance_gap() {
    const GridImage grid(8, 8, {-1.0, 1.0, -1.0, 1.0});
    const SensorGeometry g = make_full_circle(3.0, 4);
    const WaveOperator op(grid, g, 64, 4.5 / 63);
    GridImage truth = grid.zeros_like();
    for (std::size_t r = 2; r < 6; ++r)
        for (std::size_t c = 3; c < 7; ++c) truth.at(c, r) = 1.0;
    const Sinogram data = add_noise(op.forward(truth), 0.05, Seed{10});
    oracle::DenseProblem dense;
    dense.width = dense.height = 8;
    dense.dx = grid.dx();
    dense.dy = grid.dy();
    dense.lambda = 0.05;
    dense.y.assign(data.values().begin(), data.values().end());
    dense.A.assign(data.values().size(), std::vector<double>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        GridImage unit = grid.zeros_like();
        unit.values()[i] = 1.0;
        const Sinogram col = op.forward(unit);
        for (std::size_t r = 0; r < col.values().size(); ++r) dense.A[r][i] = col.values()[r];
    }
    TvConfig cfg;
    cfg.lambda = dense.lambda;
    cfg.iterations = 2000;
    const double ours = tv_reconstruct(op, data, cfg, grid.zeros_like()).history.back().total;
    const double ref = dense.minimize_staged(std::vector<double>(grid.size(), 0.0), 12, 10000, 1.0);
    return std::abs(ours - ref) / ref;
}

Outcome tv_baseline(const Runs& runs) {
    if (!runs.ok) return {false, runs.error};
    const auto truth = read_dir(runs.a / "phantoms" / "eval");
    const double fbp = mean_error(truth, read_dir(runs.a / "fbp" / "eval"));
    const double tv = mean_error(truth, read_dir(runs.a / "tv" / "eval"));
    // Each objective log must show a non-increasing running minimum that ends below its start.
    std::size_t logs = 0, bad = 0;
    for (const auto& p : list_files(runs.a / "tv" / "eval" / "objective", ".csv")) {
        std::ifstream in(p);
        std::string line;
        std::getline(in, line);
        double running = INFINITY, first = NAN, prev_running = INFINITY;
        bool monotone = true;
        while (std::getline(in, line)) {
            const double total = std::stod(line.substr(line.rfind(',') + 1));
            if (std::isnan(first)) first = total;
            running = std::min(running, total);
            monotone = monotone && running <= prev_running;
            prev_running = running;
        }
        ++logs;
        if (!monotone || !(running < first)) ++bad;
    }
    const double gap = tiny_instance_gap();
    const bool ok = tv < fbp && logs == truth.size() && bad == 0 && gap < 1e-3;
    return {ok, fmt("mean relMSE tv %.4f vs fbp %.4f; %zu/%zu objective logs decreasing; tiny-instance gap %.1e", tv,
                    fbp, logs - bad, logs, gap)};
}

Outcome determinism(const Runs& runs) {
    if (!runs.ok) return {false, runs.error};
    std::set<fs::path> files;
    for (const fs::path& root : {runs.a, runs.b})
        for (const auto& e : fs::recursive_directory_iterator(root))
            if (e.is_regular_file()) files.insert(fs::relative(e.path(), root));
    std::size_t differ = 0, checkpoints = 0, recons = 0, reports = 0;
    std::string first;
    for (const auto& rel : files) {
        const bool same = fs::exists(runs.a / rel) && fs::exists(runs.b / rel) &&
                          read_file(runs.a / rel) == read_file(runs.b / rel);
        if (!same) {
            if (differ++ == 0) first = rel.string();
            continue;
        }
        const std::string top = rel.begin()->string();
        if (rel.extension() == ".patw") ++checkpoints;
        if ((top == "fbp" || top == "tv" || top == "cnn") && rel.extension() == ".pati") ++recons;
        if (top == "report") ++reports;
    }
    const bool ok = differ == 0 && checkpoints == 2 && recons > 0 && reports > 0;
    std::string d = fmt("%zu files compared: %zu checkpoints, %zu reconstructions, %zu report files identical",
                        files.size(), checkpoints, recons, reports);
    if (differ) d += fmt("; %zu differ (first: %s)", differ, first.c_str());
    return {ok, d};
}

Outcome noise_calibration() {
    const PipelineConfig cfg = PipelineConfig::full();
    const GridImage phantom = sample_phantom(Seed{0x9015e}, cfg.grid(), {}).image;
    const Sinogram clean = forward(phantom, cfg.geometry(), cfg.samples, cfg.dt(), cfg.forward_config());
    const Sinogram noisy = add_noise(clean, 0.1, Seed{0x9016});
    auto stddev = [](const std::vector<double>& v) {
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        double q = 0.0;
        for (double x : v) q += (x - m) * (x - m);
        return std::sqrt(q / v.size());
    };
    std::vector<double> data(clean.values().begin(), clean.values().end()), eps(data.size());
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = noisy.values()[i] - data[i];
    const double ratio = stddev(eps) / stddev(data);
    return {std::abs(ratio - 0.1) <= 0.005,
            fmt("sigma ratio %.4f on %zux%zu samples", ratio, clean.detectors(), clean.samples())};
}

Outcome throughput(const Runs& runs) {
    if (!runs.ok) return {false, runs.error};
    const std::size_t saved = thread_count();
    set_thread_count(1);
    const auto net = nn::load_params<float>(runs.a / "models" / "snet.patw");
    Rng rng(Seed{0x7b});
    nn::Tensor<float> x(1, 1, 128, 128);
    for (float& v : x.values()) v = static_cast<float>(rng.uniform(0.0, 1.0));
    auto t0 = Clock::now();
    const auto y = nn::forward(net, x);
    const double cnn_secs = seconds_since(t0);
    set_thread_count(saved);

    const PipelineConfig cfg = PipelineConfig::full();
    Sinogram sino(cfg.geometry(), cfg.samples, cfg.dt());
    for (double& v : sino.values()) v = rng.uniform(-1.0, 1.0);
    t0 = Clock::now();
    const GridImage rec = fbp_reconstruct(sino, cfg.grid());
    const double fbp_secs = seconds_since(t0);
    const bool ok = cnn_secs < 1.0 && fbp_secs < 30.0 && y.all_finite() && rec.all_finite();
    return {ok, fmt("S-Net 128x128 single-threaded %.3f s; FBP M=28 N=2963 128x128 %.3f s", cnn_secs, fbp_secs)};
}

}  // namespace

int main(int argc, char** argv) {
    fs::path work = fs::temp_directory_path() / "pat_acceptance";
    std::set<int> only;
    bool reuse = false;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--work" && i + 1 < argc) {
            work = argv[++i];
        } else if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
        } else if (a == "--reuse") {
            reuse = true;
        } else {
            std::fprintf(stderr, "usage: %s [--work DIR] [--only 1,2,...] [--reuse]\n", argv[0]);
            return 2;
        }
    }
    fs::create_directories(work);
    auto wanted = [&](int k) { return only.empty() || only.count(k) > 0; };

    int failures = 0;
    auto report = [&](int k, const char* name, const std::function<Outcome()>& fn) {
        if (!wanted(k)) return;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", k, name, o.detail.c_str());
        std::fflush(stdout);
    };

    double full_err = 0.0;
    report(1, "adjoint", adjoint_test);
    report(2, "forward fidelity", forward_fidelity);
    if (wanted(3) || wanted(4)) report(3, "full-view FBP", [&] { return fbp_full_view(full_err); });
    if (wanted(4) && !wanted(3)) full_err = full_view_error(smooth_ring(128, 128, kDefaultExtent));
    report(4, "limited-view degradation", [&] { return limited_view(full_err); });
    report(5, "gradient checks", gradient_checks);

    Runs runs;
    if (wanted(6) || wanted(7) || wanted(8) || wanted(10)) runs = make_runs(work, reuse);
    report(6, "learning efficacy", [&] { return learning_efficacy(runs); });
    report(7, "TV baseline", [&] { return tv_baseline(runs); });
    report(8, "determinism", [&] { return determinism(runs); });
    report(9, "noise calibration", noise_calibration);
    report(10, "throughput", [&] { return throughput(runs); });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
