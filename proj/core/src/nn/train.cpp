#include "pat/nn/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace pat::nn {

namespace {

constexpr std::uint64_t kShuffleStream = 1;

template <class T>
void check_set(const std::vector<Example<T>>& set, const char* name) {
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& e = set[i];
        if (!e.input.same_shape(e.target) || e.input.n() != 1 || e.input.c() != 1) {
            throw InvalidArgument(std::string(name) + " example " + std::to_string(i) +
                                  ": input and target must be matching (1, 1, H, W) tensors");
        }
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
    if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
}

template <class T>
double mean_l1(const Network<T>& net, const std::vector<Example<T>>& set) {
    if (set.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (const auto& e : set) sum += static_cast<double>(l1_loss(forward(net, e.input), e.target));
    return sum / static_cast<double>(set.size());
}

template <class T>
TrainResult<T> train(Network<T> net, const std::vector<Example<T>>& train_set,
                     const std::vector<Example<T>>& eval_set, const TrainConfig& cfg,
                     const std::function<void(const SweepRecord&)>& on_sweep) {
    cfg.validate();
    if (train_set.empty()) throw InvalidArgument("training set is empty");
    check_set(train_set, "training");
    check_set(eval_set, "eval");

    TrainResult<T> result;
    Network<T> velocity = make_network<T>(net.arch);
    Network<T> grad = make_network<T>(net.arch);
    const T eta = static_cast<T>(cfg.learning_rate);
    const T beta = static_cast<T>(cfg.momentum);
    std::vector<std::size_t> order(train_set.size());
    Tape<T> tape;
    Tensor<T> dy;

    for (std::size_t sweep = 1; sweep <= cfg.sweeps; ++sweep) {
        std::iota(order.begin(), order.end(), std::size_t(0));
        Rng rng(derive_seed(cfg.seed, kShuffleStream, sweep));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            grad.set_zero();
            for (std::size_t b = start; b < stop; ++b) {
                const auto& e = train_set[order[b]];
                const Tensor<T> out = forward_train(net, e.input, tape);
                const double loss = static_cast<double>(l1_loss(out, e.target, &dy));
                if (!std::isfinite(loss)) {
                    throw NumericalError("training diverged: non-finite loss in sweep " + std::to_string(sweep) +
                                         " at example " + std::to_string(order[b]));
                }
                loss_sum += loss;
                backward<T>(net, tape, dy, grad, nullptr);
            }
            const T scale = T(1) / static_cast<T>(stop - start);
            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                auto step = [&](std::vector<T>& w, std::vector<T>& v, const std::vector<T>& g) {
                    for (std::size_t i = 0; i < w.size(); ++i) {
                        v[i] = beta * v[i] - eta * (g[i] * scale);
                        w[i] += v[i];
                    }
                };
                step(net.layers[l].kernel, velocity.layers[l].kernel, grad.layers[l].kernel);
                step(net.layers[l].bias, velocity.layers[l].bias, grad.layers[l].bias);
            }
        }
        for (const auto& l : net.layers) {
            for (T v : l.kernel)
                if (!std::isfinite(v)) throw NumericalError("training diverged: non-finite weight in sweep " +
                                                            std::to_string(sweep));
        }
        SweepRecord rec;
        rec.sweep = sweep;
        rec.train_l1 = loss_sum / static_cast<double>(train_set.size());
        rec.eval_l1 = mean_l1(net, eval_set);
        result.history.push_back(rec);
        if (on_sweep) on_sweep(rec);
    }
    result.net = std::move(net);
    return result;
}

std::string history_csv(const std::vector<SweepRecord>& history) {
    std::ostringstream os;
    os.precision(9);
    os << "sweep,train_L1,eval_L1\n";
    for (const auto& r : history) os << r.sweep << ',' << r.train_l1 << ',' << r.eval_l1 << '\n';
    return os.str();
}

template TrainResult<float> train(Network<float>, const std::vector<Example<float>>&,
                                  const std::vector<Example<float>>&, const TrainConfig&,
                                  const std::function<void(const SweepRecord&)>&);
template TrainResult<double> train(Network<double>, const std::vector<Example<double>>&,
                                   const std::vector<Example<double>>&, const TrainConfig&,
                                   const std::function<void(const SweepRecord&)>&);
template double mean_l1(const Network<float>&, const std::vector<Example<float>>&);
template double mean_l1(const Network<double>&, const std::vector<Example<double>>&);

}  // namespace pat::nn
