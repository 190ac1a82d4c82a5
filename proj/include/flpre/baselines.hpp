#pragma once

#include "flpre/coprefl.hpp"
#include "flpre/fl.hpp"

namespace flpre {

struct QfflConfig {
    double q = 1.0;
};

struct FedProxConfig {
    double mu = 1.0;
};

/// Plain FedAvg used as a pre-training baseline (alias of run_fedavg).
ParameterVector pretrain_fedavg(const ParameterVector& init, const ModelSpec& spec,
                                const std::vector<LabeledDataset>& clients,
                                const RoundConfig& cfg, const RngPolicy& policy,
                                const PostRoundHook& post_round = {});

/// First-order MAML baseline: participants local-train on their support sets,
/// take one query-gradient step with outer_lr, and the stepped models are
/// aggregated weighted by full local dataset size.
ParameterVector pretrain_fedmeta(const ParameterVector& init, const ModelSpec& spec,
                                 const std::vector<ClientShard>& shards, const RoundConfig& cfg,
                                 double inner_lr, double outer_lr, const RngPolicy& policy,
                                 const PostRoundHook& post_round = {});

/// Loss-power reweighted aggregation with w_j = n_j * (loss_j + 1e-10)^q.
/// Stated as base + sum_j w_j (params_j - base) / sum_j w_j; base cancels, so
/// the reduction runs through the same weighted-mean kernel as aggregate and
/// q == 0 reproduces it bit for bit.
ParameterVector qffl_aggregate(const std::vector<ClientUpdate>& updates,
                               const std::vector<double>& per_client_train_loss, double q,
                               const ParameterVector& base);

/// FedAvg loop with qffl_aggregate in place of plain aggregation; loss_j is
/// the participant's post-training loss on its own local data.
ParameterVector pretrain_qffl(const ParameterVector& init, const ModelSpec& spec,
                              const std::vector<LabeledDataset>& clients, const RoundConfig& cfg,
                              const QfflConfig& qcfg, const RngPolicy& policy,
                              const PostRoundHook& post_round = {});

/// Plain minibatch SGD over shuffled epochs on pooled data.
ParameterVector pretrain_centralized(const ParameterVector& init, const ModelSpec& spec,
                                     const LabeledDataset& pooled, int epochs, double lr,
                                     int batch_size, std::uint64_t seed);

/// A few SGD iterations on the server dataset; lifts round-based baselines
/// into the hybrid server-data setting.
ParameterVector server_refine(const ParameterVector& global, const ModelSpec& spec,
                              const LabeledDataset& server_data, int iters, double lr, Rng& rng,
                              int batch_size = 32);

}  // namespace flpre
