#include "flpre/coprefl.hpp"

#include <stdexcept>

namespace flpre {

QueryEvaluation query_evaluate(const ParameterVector& temp_global, const ModelSpec& spec,
                               const std::vector<LabeledDataset>& query_sets) {
    if (query_sets.empty()) throw std::invalid_argument("query_evaluate: no query sets");
    for (const auto& q : query_sets)
        if (q.empty()) throw std::invalid_argument("query_evaluate: empty query set");
    QueryEvaluation eval;
    eval.losses.resize(query_sets.size());
    eval.grads.resize(query_sets.size());
    parallel_for(query_sets.size(), [&](std::size_t j) {
        const Batch b = as_batch(query_sets[j]);
        eval.losses[j] = forward_loss(temp_global, spec, b).loss;
        eval.grads[j] = gradient(temp_global, spec, b);
    });
    return eval;
}

MetaLossReport meta_loss(const std::vector<double>& losses, double gamma) {
    if (losses.empty()) throw std::invalid_argument("meta_loss: no losses");
    MetaLossReport rep;
    rep.per_client_losses = losses;
    for (double l : losses) rep.total += l;
    const double m = static_cast<double>(losses.size());
    rep.mean = rep.total / m;
    for (double l : losses) {
        const double d = l - rep.mean;
        rep.variance += d * d;
    }
    rep.variance /= m;
    rep.combined = gamma * rep.total + (1.0 - gamma) * rep.variance;
    return rep;
}

GradientVector meta_gradient(const std::vector<double>& losses,
                             const std::vector<GradientVector>& grads, double gamma) {
    if (losses.empty()) throw std::invalid_argument("meta_gradient: no losses");
    if (losses.size() != grads.size())
        throw std::invalid_argument("meta_gradient: loss/gradient count mismatch");
    const std::size_t len = grads[0].size();
    for (const auto& g : grads)
        if (g.size() != len) throw std::invalid_argument("meta_gradient: gradient length mismatch");
    const double m = static_cast<double>(losses.size());
    double mean = 0.0;
    for (double l : losses) mean += l;
    mean /= m;
    GradientVector sum_g(len, 0.0), var_g(len, 0.0);
    for (std::size_t j = 0; j < grads.size(); ++j) {
        const double centered = losses[j] - mean;
        const GradientVector& g = grads[j];
        for (std::size_t i = 0; i < len; ++i) {
            sum_g[i] += g[i];
            var_g[i] += centered * g[i];
        }
    }
    const double var_scale = (1.0 - gamma) * (2.0 / m);
    GradientVector out(len);
    for (std::size_t i = 0; i < len; ++i) out[i] = gamma * sum_g[i] + var_scale * var_g[i];
    return out;
}

ParameterVector meta_update(const ParameterVector& temp_global, const GradientVector& meta_grad,
                            double zeta) {
    if (temp_global.size() != meta_grad.size())
        throw std::invalid_argument("meta_update: length mismatch");
    if (zeta == 0.0) return temp_global;
    return sgd_step(temp_global, meta_grad, zeta);
}

namespace {

// The shared round body: local training on the given per-participant datasets,
// size-weighted aggregation, then a meta step driven by the supplied query
// sets. Used by both scenarios; only the data sources differ.
ParameterVector meta_round(const ParameterVector& global, const ModelSpec& spec,
                           const std::vector<int>& participants,
                           const std::vector<const LabeledDataset*>& train_sets,
                           const std::vector<LabeledDataset>& query_sets, const RoundConfig& cfg,
                           const BalancerConfig& bal, const RngPolicy& policy, int round,
                           MetaLossReport& report_out) {
    std::vector<ClientUpdate> updates(participants.size());
    parallel_for(participants.size(), [&](std::size_t k) {
        const int id = participants[k];
        Rng rng = policy.rng(streams::kLocalTrain, static_cast<std::uint64_t>(round),
                             static_cast<std::uint64_t>(id));
        ParameterVector trained = local_train(global, spec, *train_sets[k], cfg.local_iters,
                                              cfg.local_lr, cfg.batch_size, rng);
        updates[k] = ClientUpdate{id, std::move(trained), train_sets[k]->size()};
    });
    const ParameterVector temp = aggregate(updates);
    const QueryEvaluation eval = query_evaluate(temp, spec, query_sets);
    report_out = meta_loss(eval.losses, bal.gamma);
    const GradientVector mg = meta_gradient(eval.losses, eval.grads, bal.gamma);
    return meta_update(temp, mg, bal.meta_lr);
}

}  // namespace

PretrainResult pretrain_scenario1(const ParameterVector& init, const ModelSpec& spec,
                                  const std::vector<ClientShard>& shards, const RoundConfig& cfg,
                                  const BalancerConfig& bal, const RngPolicy& policy) {
    if (shards.empty()) throw std::invalid_argument("pretrain_scenario1: no shards");
    for (const auto& s : shards)
        if (s.support.empty() || s.query.empty())
            throw std::invalid_argument("pretrain_scenario1: shard with empty support or query");
    PretrainResult result;
    result.final_params = init;
    result.history.reserve(cfg.rounds);
    for (int t = 1; t <= cfg.rounds; ++t) {
        const auto parts = select_participants(static_cast<int>(shards.size()),
                                               cfg.participants_per_round, t, policy);
        std::vector<LabeledDataset> supports(parts.size()), queries(parts.size());
        for (std::size_t k = 0; k < parts.size(); ++k) {
            supports[k] = shards[parts[k]].support_data();
            queries[k] = shards[parts[k]].query_data();
        }
        std::vector<const LabeledDataset*> train_sets(parts.size());
        for (std::size_t k = 0; k < parts.size(); ++k) train_sets[k] = &supports[k];
        MetaLossReport rep;
        result.final_params = meta_round(result.final_params, spec, parts, train_sets, queries,
                                         cfg, bal, policy, t, rep);
        result.history.push_back(std::move(rep));
    }
    return result;
}

PretrainResult pretrain_scenario2(const ParameterVector& init, const ModelSpec& spec,
                                  const std::vector<LabeledDataset>& clients,
                                  const LabeledDataset& server_data, const RoundConfig& cfg,
                                  const BalancerConfig& bal, const RngPolicy& policy) {
    if (clients.empty()) throw std::invalid_argument("pretrain_scenario2: no clients");
    if (server_data.size() < cfg.participants_per_round)
        throw std::invalid_argument(
            "pretrain_scenario2: server dataset smaller than participants_per_round");
    PretrainResult result;
    result.final_params = init;
    result.history.reserve(cfg.rounds);
    for (int t = 1; t <= cfg.rounds; ++t) {
        const auto parts = select_participants(static_cast<int>(clients.size()),
                                               cfg.participants_per_round, t, policy);
        std::vector<const LabeledDataset*> train_sets(parts.size());
        for (std::size_t k = 0; k < parts.size(); ++k) train_sets[k] = &clients[parts[k]];
        // Fresh equal server partitions every round stand in for query sets.
        const auto partitions =
            partition_equal(server_data, static_cast<int>(parts.size()),
                            policy.stream(streams::kServerPartition, static_cast<std::uint64_t>(t)));
        MetaLossReport rep;
        result.final_params = meta_round(result.final_params, spec, parts, train_sets, partitions,
                                         cfg, bal, policy, t, rep);
        result.history.push_back(std::move(rep));
    }
    return result;
}

PretrainResult pretrain_coprefl_sgd(const ParameterVector& init, const ModelSpec& spec,
                                    const std::vector<ClientShard>& shards,
                                    const LabeledDataset& server_data, const RoundConfig& cfg,
                                    const BalancerConfig& bal, int refine_iters,
                                    const RngPolicy& policy) {
    if (refine_iters > 0 && server_data.empty())
        throw std::invalid_argument("pretrain_coprefl_sgd: server data required");
    if (refine_iters < 0)
        throw std::invalid_argument("pretrain_coprefl_sgd: refine_iters must be >= 0");
    if (shards.empty()) throw std::invalid_argument("pretrain_coprefl_sgd: no shards");
    for (const auto& s : shards)
        if (s.support.empty() || s.query.empty())
            throw std::invalid_argument("pretrain_coprefl_sgd: shard with empty support or query");
    PretrainResult result;
    result.final_params = init;
    result.history.reserve(cfg.rounds);
    for (int t = 1; t <= cfg.rounds; ++t) {
        const auto parts = select_participants(static_cast<int>(shards.size()),
                                               cfg.participants_per_round, t, policy);
        std::vector<LabeledDataset> supports(parts.size()), queries(parts.size());
        for (std::size_t k = 0; k < parts.size(); ++k) {
            supports[k] = shards[parts[k]].support_data();
            queries[k] = shards[parts[k]].query_data();
        }
        std::vector<const LabeledDataset*> train_sets(parts.size());
        for (std::size_t k = 0; k < parts.size(); ++k) train_sets[k] = &supports[k];
        MetaLossReport rep;
        ParameterVector next = meta_round(result.final_params, spec, parts, train_sets, queries,
                                          cfg, bal, policy, t, rep);
        if (refine_iters > 0) {
            Rng rng = policy.rng(streams::kServerRefine, static_cast<std::uint64_t>(t));
            next = local_train(next, spec, server_data, refine_iters, cfg.local_lr,
                               cfg.batch_size, rng);
        }
        result.final_params = std::move(next);
        result.history.push_back(std::move(rep));
    }
    return result;
}

}  // namespace flpre
