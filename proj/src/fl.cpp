#include "flpre/fl.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace flpre {

std::vector<int> select_participants(int n_clients, int m, int round_index,
                                     const RngPolicy& policy) {
    if (m < 1) throw std::invalid_argument("select_participants: m must be >= 1");
    if (m > n_clients)
        throw std::invalid_argument("select_participants: m exceeds number of clients");
    Rng rng = policy.rng(streams::kSelect, static_cast<std::uint64_t>(round_index));
    std::vector<int> ids(n_clients);
    std::iota(ids.begin(), ids.end(), 0);
    for (int i = 0; i < m; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_clients - i)));
        std::swap(ids[i], ids[j]);
    }
    ids.resize(m);
    std::sort(ids.begin(), ids.end());
    return ids;
}

namespace {

// One SGD pass shared by local_train and fedprox_local_train. anchor == null
// disables the proximal term entirely, keeping the mu == 0 collapse exact.
ParameterVector train_impl(const ParameterVector& start, const ModelSpec& spec,
                           const LabeledDataset& data, int iters, double lr, int batch_size,
                           Rng& rng, const ParameterVector* anchor, double mu) {
    if (data.empty()) throw std::invalid_argument("local_train: dataset is empty");
    if (iters <= 0 || lr == 0.0) return start;
    const int n = data.size();
    const int bs = std::min(std::max(batch_size, 1), n);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    ParameterVector params = start;
    std::vector<int> batch_idx(bs);
    for (int it = 0; it < iters; ++it) {
        for (int k = 0; k < bs; ++k)
            batch_idx[k] = order[(static_cast<std::size_t>(it) * bs + k) % n];
        std::sort(batch_idx.begin(), batch_idx.end());
        GradientVector g = gradient(params, spec, gather(data, batch_idx));
        if (anchor && mu != 0.0) {
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += mu * (params[i] - (*anchor)[i]);
        }
        params = sgd_step(params, g, lr);
    }
    return params;
}

}  // namespace

ParameterVector local_train(const ParameterVector& start, const ModelSpec& spec,
                            const LabeledDataset& data, int iters, double lr, int batch_size,
                            Rng& rng) {
    return train_impl(start, spec, data, iters, lr, batch_size, rng, nullptr, 0.0);
}

ParameterVector fedprox_local_train(const ParameterVector& start,
                                    const ParameterVector& anchor, const ModelSpec& spec,
                                    const LabeledDataset& data, int iters, double lr, double mu,
                                    int batch_size, Rng& rng) {
    if (anchor.size() != start.size())
        throw std::invalid_argument("fedprox_local_train: anchor length mismatch");
    if (mu < 0.0) throw std::invalid_argument("fedprox_local_train: mu must be >= 0");
    return train_impl(start, spec, data, iters, lr, batch_size, rng, &anchor, mu);
}

ParameterVector weighted_mean_params(const std::vector<const ParameterVector*>& params,
                                     const std::vector<double>& weights) {
    if (params.empty()) throw std::invalid_argument("aggregate: no updates");
    if (params.size() != weights.size())
        throw std::invalid_argument("aggregate: weight count mismatch");
    const std::size_t len = params[0]->size();
    for (const auto* p : params)
        if (p->size() != len) throw std::invalid_argument("aggregate: parameter length mismatch");
    if (params.size() == 1) return *params[0];
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw std::invalid_argument("aggregate: weights must be positive");
        total += w;
    }
    ParameterVector out(len, 0.0);
    for (std::size_t j = 0; j < params.size(); ++j) {
        const double wn = weights[j] / total;
        const ParameterVector& p = *params[j];
        for (std::size_t i = 0; i < len; ++i) out[i] += wn * p[i];
    }
    return out;
}

ParameterVector aggregate(const std::vector<ClientUpdate>& updates) {
    if (updates.empty()) throw std::invalid_argument("aggregate: no updates");
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
        if (updates[j].n_samples < 1)
            throw std::invalid_argument("aggregate: n_samples must be >= 1");
        params.push_back(&updates[j].params);
        weights.push_back(static_cast<double>(updates[j].n_samples));
    }
    return weighted_mean_params(params, weights);
}

ParameterVector run_fedavg(const ParameterVector& init, const ModelSpec& spec,
                           const std::vector<LabeledDataset>& clients, const RoundConfig& cfg,
                           const RngPolicy& policy, const RoundCallback& on_round,
                           const PostRoundHook& post_round) {
    if (clients.empty()) throw std::invalid_argument("run_fedavg: no clients");
    ParameterVector global = init;
    for (int t = 1; t <= cfg.rounds; ++t) {
        const auto parts =
            select_participants(static_cast<int>(clients.size()),
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
        global = aggregate(updates);
        if (post_round) global = post_round(t, global);
        if (on_round) {
            double mean_loss = 0.0;
            for (double l : losses) mean_loss += l;
            mean_loss /= static_cast<double>(losses.size());
            on_round(RoundInfo{t, parts, mean_loss});
        }
    }
    return global;
}

}  // namespace flpre
