#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "flpre/data.hpp"
#include "flpre/model.hpp"
#include "flpre/util.hpp"

namespace flpre {

struct RoundConfig {
    int rounds = 50;                 // T
    int participants_per_round = 20; // |m|
    int local_iters = 5;
    double local_lr = 1e-3;          // eta
    int batch_size = 32;             // clamped to shard size
};

struct ClientUpdate {
    int client_id = 0;
    ParameterVector params;
    long long n_samples = 0;  // aggregation weight basis
};

struct RoundInfo {
    int round = 0;
    std::vector<int> participants;
    double mean_client_loss = 0.0;  // post-training loss on each participant's own data
};

using RoundCallback = std::function<void(const RoundInfo&)>;
using PostRoundHook = std::function<ParameterVector(int round, const ParameterVector&)>;

/// Uniform sample of m distinct client ids, sorted ascending. Deterministic
/// in (policy, round_index).
std::vector<int> select_participants(int n_clients, int m, int round_index,
                                     const RngPolicy& policy);

/// `iters` minibatch SGD steps. Indices are shuffled once per call and cycled;
/// each batch's indices are sorted, so a full-size batch reproduces the exact
/// whole-dataset gradient.
ParameterVector local_train(const ParameterVector& start, const ModelSpec& spec,
                            const LabeledDataset& data, int iters, double lr, int batch_size,
                            Rng& rng);

/// Same schedule with the FedProx penalty (mu/2)*||theta - anchor||^2 added to
/// the loss; mu == 0 is bit-identical to local_train.
ParameterVector fedprox_local_train(const ParameterVector& start,
                                    const ParameterVector& anchor, const ModelSpec& spec,
                                    const LabeledDataset& data, int iters, double lr, double mu,
                                    int batch_size, Rng& rng);

/// Sample-weighted parameter average: sum_j (n_j / sum_i n_i) * params_j.
/// Updates are reduced in ascending client_id order regardless of list order.
ParameterVector aggregate(const std::vector<ClientUpdate>& updates);

/// Shared reduction kernel behind aggregate and its reweighted variants.
ParameterVector weighted_mean_params(const std::vector<const ParameterVector*>& params,
                                     const std::vector<double>& weights);

/// T rounds of {select, broadcast, parallel local training on full local data,
/// sample-weighted aggregation}. post_round, when set, maps the aggregated
/// model before it becomes the next broadcast.
ParameterVector run_fedavg(const ParameterVector& init, const ModelSpec& spec,
                           const std::vector<LabeledDataset>& clients, const RoundConfig& cfg,
                           const RngPolicy& policy, const RoundCallback& on_round = {},
                           const PostRoundHook& post_round = {});

}  // namespace flpre
