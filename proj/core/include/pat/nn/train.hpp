#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <vector>

#include "pat/nn/network.hpp"

namespace pat::nn {

template <class T>
struct Example {
    Tensor<T> input;
    Tensor<T> target;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double momentum = 0.99;
    std::size_t batch_size = 1;
    std::size_t sweeps = 30;
    Seed seed{0x5eedULL};

    void validate() const;
};

struct SweepRecord {
    std::size_t sweep = 0;
    /// Mean per-example L1 loss seen during the sweep.
    double train_l1 = 0.0;
    /// Mean L1 loss on the eval set after the sweep; NaN without an eval set.
    double eval_l1 = 0.0;
};

template <class T>
struct TrainResult {
    Network<T> net;
    std::vector<SweepRecord> history;
};

/// Mini-batch gradient descent with heavy-ball momentum:
///   v <- beta v - eta g,  W <- W + v,
/// with g the batch mean of the per-example L1 gradients. Each sweep draws a
/// fresh Fisher-Yates permutation from derive_seed(cfg.seed, 1, sweep) and
/// splits it into consecutive batches (the last one may be smaller).
/// Throws NumericalError when a loss or weight becomes non-finite.
template <class T>
TrainResult<T> train(Network<T> net, const std::vector<Example<T>>& train_set,
                     const std::vector<Example<T>>& eval_set, const TrainConfig& cfg,
                     const std::function<void(const SweepRecord&)>& on_sweep = {});

/// Mean L1 loss of the network over a set.
template <class T>
double mean_l1(const Network<T>& net, const std::vector<Example<T>>& set);

/// CSV with header "sweep,train_L1,eval_L1".
std::string history_csv(const std::vector<SweepRecord>& history);

}  // namespace pat::nn
