#pragma once

#include <vector>

#include "flpre/fl.hpp"

namespace flpre {

struct BalancerConfig {
    double gamma = 0.5;   // 1 = pure average performance, 0 = pure fairness
    double meta_lr = 1e-3;  // zeta
};

/// Query-side losses of one round and their gamma blend.
///   total    = sum_j L_j
///   mean     = total / m
///   variance = (1/m) sum_j (L_j - mean)^2
///   combined = gamma * total + (1 - gamma) * variance
/// Note the blend mixes the summed total with a mean-centered variance; the
/// two terms deliberately live on different scales.
struct MetaLossReport {
    std::vector<double> per_client_losses;
    double total = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    double combined = 0.0;
};

struct PretrainResult {
    ParameterVector final_params;
    std::vector<MetaLossReport> history;  // one report per round
};

struct QueryEvaluation {
    std::vector<double> losses;
    std::vector<GradientVector> grads;
};

/// Loss and exact gradient of the shared model on every query set, reduced in
/// ascending set order.
QueryEvaluation query_evaluate(const ParameterVector& temp_global, const ModelSpec& spec,
                               const std::vector<LabeledDataset>& query_sets);

MetaLossReport meta_loss(const std::vector<double>& losses, double gamma);

/// Exact differential of MetaLossReport::combined w.r.t. the shared parameter
/// point:
///   gamma * sum_j g_j + (1 - gamma) * (2/m) * sum_j (L_j - mean) * g_j
/// The mean-gradient cross term cancels because sum_j (L_j - mean) = 0.
GradientVector meta_gradient(const std::vector<double>& losses,
                             const std::vector<GradientVector>& grads, double gamma);

/// Single step on the temporary global model; zeta == 0 returns it unchanged.
ParameterVector meta_update(const ParameterVector& temp_global, const GradientVector& meta_grad,
                            double zeta);

/// Pre-training with client-held data only. Per round: select participants,
/// local-train each on its support set, aggregate weighted by support size,
/// then meta-update the temporary global model with the gamma-blended query
/// meta-loss.
PretrainResult pretrain_scenario1(const ParameterVector& init, const ModelSpec& spec,
                                  const std::vector<ClientShard>& shards, const RoundConfig& cfg,
                                  const BalancerConfig& bal, const RngPolicy& policy);

/// Hybrid pre-training: clients train on their full datasets; the server's
/// dataset is re-split into |m| equal partitions every round and drives the
/// meta-update in place of client query sets.
PretrainResult pretrain_scenario2(const ParameterVector& init, const ModelSpec& spec,
                                  const std::vector<LabeledDataset>& clients,
                                  const LabeledDataset& server_data, const RoundConfig& cfg,
                                  const BalancerConfig& bal, const RngPolicy& policy);

/// Ablation: the scenario-I round followed by refine_iters plain SGD steps on
/// server data before the broadcast. refine_iters == 0 matches scenario I
/// exactly.
PretrainResult pretrain_coprefl_sgd(const ParameterVector& init, const ModelSpec& spec,
                                    const std::vector<ClientShard>& shards,
                                    const LabeledDataset& server_data, const RoundConfig& cfg,
                                    const BalancerConfig& bal, int refine_iters,
                                    const RngPolicy& policy);

}  // namespace flpre
