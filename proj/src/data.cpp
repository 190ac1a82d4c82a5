#include "flpre/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

namespace flpre {

namespace {

std::vector<int> distinct_sorted(const std::vector<int>& labels) {
    std::set<int> s(labels.begin(), labels.end());
    return std::vector<int>(s.begin(), s.end());
}

std::vector<int> shuffled_indices(int n, Rng& rng) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    return idx;
}

// Fixed unit direction for a class center; depends only on (class, dim).
std::vector<double> class_direction(int cls, int dim) {
    Rng rng(hash_combine(hash_combine(0x66c1a55d19ULL, static_cast<std::uint64_t>(cls)),
                         static_cast<std::uint64_t>(dim)));
    std::vector<double> u(dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (int i = 0; i < dim; ++i) {
            u[i] = rng.normal();
            norm += u[i] * u[i];
        }
        norm = std::sqrt(norm);
    } while (norm < 1e-9);
    for (int i = 0; i < dim; ++i) u[i] /= norm;
    return u;
}

// Largest-remainder rounding of proportions into integer counts summing to n.
// Ties go to the lower client index.
std::vector<int> largest_remainder(const std::vector<double>& props, int n) {
    const int k = static_cast<int>(props.size());
    std::vector<int> counts(k);
    std::vector<std::pair<double, int>> rema(k);
    int assigned = 0;
    for (int j = 0; j < k; ++j) {
        const double share = props[j] * n;
        counts[j] = static_cast<int>(std::floor(share));
        rema[j] = {share - counts[j], j};
        assigned += counts[j];
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int r = 0; r < n - assigned; ++r) counts[rema[r].second] += 1;
    return counts;
}

}  // namespace

LabeledDataset make_dataset(int dim, std::vector<double> features, std::vector<int> labels) {
    if (dim < 1) throw std::invalid_argument("dataset: dim must be positive");
    if (labels.empty()) throw std::invalid_argument("dataset: must contain at least one sample");
    if (features.size() != labels.size() * static_cast<std::size_t>(dim))
        throw std::invalid_argument("dataset: feature matrix size mismatch");
    LabeledDataset ds;
    ds.dim = dim;
    ds.features = std::move(features);
    ds.labels = std::move(labels);
    ds.class_ids = distinct_sorted(ds.labels);
    return ds;
}

LabeledDataset subset(const LabeledDataset& ds, const std::vector<int>& indices) {
    std::vector<double> feats;
    feats.reserve(indices.size() * ds.dim);
    std::vector<int> labels;
    labels.reserve(indices.size());
    for (int i : indices) {
        if (i < 0 || i >= ds.size()) throw std::invalid_argument("subset: index out of range");
        const double* row = ds.features.data() + static_cast<std::size_t>(i) * ds.dim;
        feats.insert(feats.end(), row, row + ds.dim);
        labels.push_back(ds.labels[i]);
    }
    return make_dataset(ds.dim, std::move(feats), std::move(labels));
}

Batch as_batch(const LabeledDataset& ds) {
    Batch b;
    b.dim = ds.dim;
    b.features = ds.features;
    b.labels = ds.labels;
    return b;
}

Batch gather(const LabeledDataset& ds, const std::vector<int>& indices) {
    Batch b;
    b.dim = ds.dim;
    b.features.reserve(indices.size() * ds.dim);
    b.labels.reserve(indices.size());
    for (int i : indices) {
        const double* row = ds.features.data() + static_cast<std::size_t>(i) * ds.dim;
        b.features.insert(b.features.end(), row, row + ds.dim);
        b.labels.push_back(ds.labels[i]);
    }
    return b;
}

LabeledDataset remap_to_contiguous(const LabeledDataset& ds) {
    std::vector<int> labels(ds.labels.size());
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        const auto it = std::lower_bound(ds.class_ids.begin(), ds.class_ids.end(), ds.labels[i]);
        labels[i] = static_cast<int>(it - ds.class_ids.begin());
    }
    return make_dataset(ds.dim, ds.features, std::move(labels));
}

LabeledDataset synth_dataset(int n_classes, int n_per_class, int dim, double separation,
                             std::uint64_t seed) {
    if (n_classes < 2) throw std::invalid_argument("synth_dataset: n_classes must be >= 2");
    if (n_per_class < 1) throw std::invalid_argument("synth_dataset: n_per_class must be >= 1");
    if (dim < 1) throw std::invalid_argument("synth_dataset: dim must be >= 1");
    if (separation < 0.0) throw std::invalid_argument("synth_dataset: separation must be >= 0");
    std::vector<double> feats;
    feats.reserve(static_cast<std::size_t>(n_classes) * n_per_class * dim);
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(n_classes) * n_per_class);
    for (int c = 0; c < n_classes; ++c) {
        const auto u = class_direction(c, dim);
        Rng rng(hash_combine(seed, static_cast<std::uint64_t>(c)));
        for (int s = 0; s < n_per_class; ++s) {
            for (int i = 0; i < dim; ++i) feats.push_back(separation * u[i] + rng.normal());
            labels.push_back(c);
        }
    }
    return make_dataset(dim, std::move(feats), std::move(labels));
}

ClassSplit split_classes(const LabeledDataset& ds, int n_pretrain_classes, std::uint64_t seed,
                         int overlap_classes) {
    const int n_cls = static_cast<int>(ds.class_ids.size());
    if (n_pretrain_classes < 1 || n_pretrain_classes >= n_cls)
        throw std::invalid_argument("split_classes: n_pretrain_classes must be in [1, n_classes)");
    if (overlap_classes < 0 || overlap_classes > n_pretrain_classes)
        throw std::invalid_argument("split_classes: overlap_classes must be in [0, n_pretrain_classes]");
    std::vector<int> order = ds.class_ids;
    Rng rng(seed);
    rng.shuffle(order);
    std::set<int> pre_set(order.begin(), order.begin() + n_pretrain_classes);
    // Overlap classes contribute their samples to both parts.
    std::set<int> down_set(order.begin() + n_pretrain_classes, order.end());
    for (int i = 0; i < overlap_classes; ++i) down_set.insert(order[i]);
    std::vector<int> pre_idx, down_idx;
    for (int i = 0; i < ds.size(); ++i) {
        if (pre_set.count(ds.labels[i])) pre_idx.push_back(i);
        if (down_set.count(ds.labels[i])) down_idx.push_back(i);
    }
    return {subset(ds, pre_idx), subset(ds, down_idx)};
}

std::pair<LabeledDataset, LabeledDataset> server_client_split(const LabeledDataset& ds,
                                                              double server_frac,
                                                              std::uint64_t seed) {
    if (server_frac < 0.0 || server_frac >= 1.0)
        throw std::invalid_argument("server_client_split: server_frac must be in [0, 1)");
    const int n = ds.size();
    const int n_server = static_cast<int>(std::llround(server_frac * n));
    Rng rng(seed);
    auto idx = shuffled_indices(n, rng);
    std::vector<int> server_idx(idx.begin(), idx.begin() + n_server);
    std::vector<int> client_idx(idx.begin() + n_server, idx.end());
    std::sort(server_idx.begin(), server_idx.end());
    std::sort(client_idx.begin(), client_idx.end());
    LabeledDataset server;
    server.dim = ds.dim;
    if (!server_idx.empty()) server = subset(ds, server_idx);
    return {subset(ds, client_idx), std::move(server)};
}

std::vector<LabeledDataset> dirichlet_partition(const LabeledDataset& ds, int n_clients,
                                                double alpha, std::uint64_t seed) {
    if (n_clients < 1) throw std::invalid_argument("dirichlet_partition: n_clients must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet_partition: alpha must be positive");
    if (n_clients > ds.size())
        throw std::invalid_argument("dirichlet_partition: more clients than samples");

    std::vector<std::vector<int>> assigned(n_clients);
    for (std::size_t ci = 0; ci < ds.class_ids.size(); ++ci) {
        const int cls = ds.class_ids[ci];
        std::vector<int> cls_idx;
        for (int i = 0; i < ds.size(); ++i)
            if (ds.labels[i] == cls) cls_idx.push_back(i);
        Rng rng(hash_combine(seed, static_cast<std::uint64_t>(cls)));
        rng.shuffle(cls_idx);
        std::vector<double> props(n_clients);
        double total = 0.0;
        for (int j = 0; j < n_clients; ++j) {
            props[j] = rng.gamma(alpha);
            total += props[j];
        }
        for (double& p : props) p /= total;
        const auto counts = largest_remainder(props, static_cast<int>(cls_idx.size()));
        std::size_t pos = 0;
        for (int j = 0; j < n_clients; ++j) {
            for (int k = 0; k < counts[j]; ++k) assigned[j].push_back(cls_idx[pos++]);
        }
    }

    // Repair empty clients from the largest one; lowest indices win ties.
    for (;;) {
        int empty = -1;
        for (int j = 0; j < n_clients; ++j)
            if (assigned[j].empty()) { empty = j; break; }
        if (empty < 0) break;
        int donor = 0;
        for (int j = 1; j < n_clients; ++j)
            if (assigned[j].size() > assigned[donor].size()) donor = j;
        assigned[empty].push_back(assigned[donor].back());
        assigned[donor].pop_back();
    }

    std::vector<LabeledDataset> parts;
    parts.reserve(n_clients);
    for (int j = 0; j < n_clients; ++j) {
        std::sort(assigned[j].begin(), assigned[j].end());
        parts.push_back(subset(ds, assigned[j]));
    }
    return parts;
}

ClientShard support_query_split(const LabeledDataset& shard_data, double support_frac,
                                std::uint64_t seed, int client_id) {
    if (!(support_frac > 0.0 && support_frac < 1.0))
        throw std::invalid_argument("support_query_split: support_frac must be in (0, 1)");
    const int n = shard_data.size();
    if (n < 2) throw std::invalid_argument("support_query_split: need at least 2 samples");
    int n_support = static_cast<int>(std::llround(support_frac * n));
    n_support = std::clamp(n_support, 1, n - 1);
    Rng rng(seed);
    auto idx = shuffled_indices(n, rng);
    ClientShard shard;
    shard.client_id = client_id;
    shard.data = shard_data;
    shard.support.assign(idx.begin(), idx.begin() + n_support);
    shard.query.assign(idx.begin() + n_support, idx.end());
    std::sort(shard.support.begin(), shard.support.end());
    std::sort(shard.query.begin(), shard.query.end());
    return shard;
}

std::vector<LabeledDataset> partition_equal(const LabeledDataset& server_data, int m,
                                            std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("partition_equal: m must be >= 1");
    if (server_data.size() < m)
        throw std::invalid_argument("partition_equal: fewer samples than partitions");
    Rng rng(seed);
    auto idx = shuffled_indices(server_data.size(), rng);
    std::vector<std::vector<int>> groups(m);
    for (std::size_t i = 0; i < idx.size(); ++i)
        groups[i % m].push_back(idx[i]);
    std::vector<LabeledDataset> parts;
    parts.reserve(m);
    for (auto& g : groups) {
        std::sort(g.begin(), g.end());
        parts.push_back(subset(server_data, g));
    }
    return parts;
}

void ensure_min_part_size(std::vector<LabeledDataset>& parts, int min_n) {
    for (;;) {
        int small = -1;
        for (std::size_t j = 0; j < parts.size(); ++j)
            if (parts[j].size() < min_n) { small = static_cast<int>(j); break; }
        if (small < 0) return;
        int donor = -1;
        for (std::size_t j = 0; j < parts.size(); ++j)
            if (donor < 0 || parts[j].size() > parts[donor].size()) donor = static_cast<int>(j);
        if (parts[donor].size() <= min_n)
            throw std::invalid_argument("ensure_min_part_size: not enough samples to repair parts");
        auto& d = parts[donor];
        auto& s = parts[small];
        const int last = d.size() - 1;
        const double* row = d.features.data() + static_cast<std::size_t>(last) * d.dim;
        if (s.dim == 0) s.dim = d.dim;
        s.features.insert(s.features.end(), row, row + d.dim);
        s.labels.push_back(d.labels[last]);
        d.features.resize(static_cast<std::size_t>(last) * d.dim);
        d.labels.pop_back();
        s.class_ids = distinct_sorted(s.labels);
        d.class_ids = distinct_sorted(d.labels);
    }
}

void write_csv(const LabeledDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    for (int i = 0; i < ds.dim; ++i) out << "f" << i << ",";
    out << "label\n";
    char buf[32];
    for (int r = 0; r < ds.size(); ++r) {
        for (int i = 0; i < ds.dim; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.features[static_cast<std::size_t>(r) * ds.dim + i]);
            out << buf << ",";
        }
        out << ds.labels[r] << "\n";
    }
}

}  // namespace flpre
