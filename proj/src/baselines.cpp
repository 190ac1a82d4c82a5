#include "flpre/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace flpre {

ParameterVector pretrain_fedavg(const ParameterVector& init, const ModelSpec& spec,
                                const std::vector<LabeledDataset>& clients,
                                const RoundConfig& cfg, const RngPolicy& policy,
                                const PostRoundHook& post_round) {
    return run_fedavg(init, spec, clients, cfg, policy, {}, post_round);
}

ParameterVector pretrain_fedmeta(const ParameterVector& init, const ModelSpec& spec,
                                 const std::vector<ClientShard>& shards, const RoundConfig& cfg,
                                 double inner_lr, double outer_lr, const RngPolicy& policy,
                                 const PostRoundHook& post_round) {
    if (shards.empty()) throw std::invalid_argument("pretrain_fedmeta: no shards");
    for (const auto& s : shards)
        if (s.support.empty() || s.query.empty())
            throw std::invalid_argument("pretrain_fedmeta: shard with empty support or query");
    ParameterVector global = init;
    for (int t = 1; t <= cfg.rounds; ++t) {
        const auto parts = select_participants(static_cast<int>(shards.size()),
                                               cfg.participants_per_round, t, policy);
        std::vector<ClientUpdate> updates(parts.size());
        parallel_for(parts.size(), [&](std::size_t k) {
            const ClientShard& shard = shards[parts[k]];
            Rng rng = policy.rng(streams::kLocalTrain, static_cast<std::uint64_t>(t),
                                 static_cast<std::uint64_t>(shard.client_id));
            ParameterVector theta = local_train(global, spec, shard.support_data(),
                                                cfg.local_iters, inner_lr, cfg.batch_size, rng);
            if (outer_lr != 0.0) {
                const GradientVector gq = gradient(theta, spec, as_batch(shard.query_data()));
                theta = sgd_step(theta, gq, outer_lr);
            }
            updates[k] = ClientUpdate{shard.client_id, std::move(theta), shard.data.size()};
        });
        global = aggregate(updates);
        if (post_round) global = post_round(t, global);
    }
    return global;
}

ParameterVector qffl_aggregate(const std::vector<ClientUpdate>& updates,
                               const std::vector<double>& per_client_train_loss, double q,
                               const ParameterVector& base) {
    if (updates.empty()) throw std::invalid_argument("qffl_aggregate: no updates");
    if (updates.size() != per_client_train_loss.size())
        throw std::invalid_argument("qffl_aggregate: loss count mismatch");
    if (q < 0.0) throw std::invalid_argument("qffl_aggregate: q must be >= 0");
    for (const auto& u : updates)
        if (u.params.size() != base.size())
            throw std::invalid_argument("qffl_aggregate: parameter length mismatch");
    for (double l : per_client_train_loss)
        if (l < 0.0) throw std::invalid_argument("qffl_aggregate: losses must be >= 0");
    constexpr double kEps = 1e-10;
    std::vector<std::size_t> order(updates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return updates[a].client_id < updates[b].client_id;
    });
    std::vector<const ParameterVector*> params;
    std::vector<double> weights;
    params.reserve(updates.size());
    weights.reserve(updates.size());
    for (std::size_t j : order) {
        params.push_back(&updates[j].params);
        weights.push_back(static_cast<double>(updates[j].n_samples) *
                          std::pow(per_client_train_loss[j] + kEps, q));
    }
    return weighted_mean_params(params, weights);
}

ParameterVector pretrain_qffl(const ParameterVector& init, const ModelSpec& spec,
                              const std::vector<LabeledDataset>& clients, const RoundConfig& cfg,
                              const QfflConfig& qcfg, const RngPolicy& policy,
                              const PostRoundHook& post_round) {
    if (clients.empty()) throw std::invalid_argument("pretrain_qffl: no clients");
    ParameterVector global = init;
    for (int t = 1; t <= cfg.rounds; ++t) {
        const auto parts = select_participants(static_cast<int>(clients.size()),
                                               cfg.participants_per_round, t, policy);
        std::vector<ClientUpdate> updates(parts.size());
        std::vector<double> losses(parts.size());
        parallel_for(parts.size(), [&](std::size_t k) {
            const int id = parts[k];
            Rng rng = policy.rng(streams::kLocalTrain, static_cast<std::uint64_t>(t),
                                 static_cast<std::uint64_t>(id));
            ParameterVector trained = local_train(global, spec, clients[id], cfg.local_iters,
                                                  cfg.local_lr, cfg.batch_size, rng);
            losses[k] = forward_loss(trained, spec, as_batch(clients[id])).loss;
            updates[k] = ClientUpdate{id, std::move(trained), clients[id].size()};
        });
        global = qffl_aggregate(updates, losses, qcfg.q, global);
        if (post_round) global = post_round(t, global);
    }
    return global;
}

ParameterVector pretrain_centralized(const ParameterVector& init, const ModelSpec& spec,
                                     const LabeledDataset& pooled, int epochs, double lr,
                                     int batch_size, std::uint64_t seed) {
    if (pooled.empty()) throw std::invalid_argument("pretrain_centralized: dataset is empty");
    if (epochs <= 0 || lr == 0.0) return init;
    const int n = pooled.size();
    const int bs = std::min(std::max(batch_size, 1), n);
    Rng rng(hash_combine(seed, streams::kCentralized));
    ParameterVector params = init;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        for (int pos = 0; pos < n; pos += bs) {
            std::vector<int> batch_idx(order.begin() + pos,
                                       order.begin() + std::min(pos + bs, n));
            std::sort(batch_idx.begin(), batch_idx.end());
            const GradientVector g = gradient(params, spec, gather(pooled, batch_idx));
            params = sgd_step(params, g, lr);
        }
    }
    return params;
}

ParameterVector server_refine(const ParameterVector& global, const ModelSpec& spec,
                              const LabeledDataset& server_data, int iters, double lr, Rng& rng,
                              int batch_size) {
    if (server_data.empty()) throw std::invalid_argument("server_refine: server data is empty");
    return local_train(global, spec, server_data, iters, lr, batch_size, rng);
}

}  // namespace flpre
