#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "flpre/model.hpp"

namespace flpre {

struct LabeledDataset {
    int dim = 0;
    std::vector<double> features;  // n x dim, row-major
    std::vector<int> labels;
    std::vector<int> class_ids;    // sorted distinct labels

    int size() const { return static_cast<int>(labels.size()); }
    bool empty() const { return labels.empty(); }
};

/// Builds a dataset and computes its class index. Throws on shape mismatch.
LabeledDataset make_dataset(int dim, std::vector<double> features, std::vector<int> labels);

/// Rows of `ds` at the given positions, in the given order.
LabeledDataset subset(const LabeledDataset& ds, const std::vector<int>& indices);

Batch as_batch(const LabeledDataset& ds);
Batch gather(const LabeledDataset& ds, const std::vector<int>& indices);

/// Relabels classes to 0..k-1 by ascending original id.
LabeledDataset remap_to_contiguous(const LabeledDataset& ds);

struct ClassSplit {
    LabeledDataset pretrain;
    LabeledDataset downstream;
};

struct ClientShard {
    int client_id = 0;
    LabeledDataset data;
    std::vector<int> support;  // sorted row indices into data
    std::vector<int> query;

    LabeledDataset support_data() const { return subset(data, support); }
    LabeledDataset query_data() const { return subset(data, query); }
};

struct FederatedDataset {
    std::vector<ClientShard> clients;
    LabeledDataset server_data;  // possibly empty
};

/// Isotropic Gaussian mixture: class c sits at separation * u_c for a fixed
/// unit vector u_c, with n_per_class unit-variance samples per class.
LabeledDataset synth_dataset(int n_classes, int n_per_class, int dim, double separation,
                             std::uint64_t seed);

/// Puts a uniformly random class subset of the requested size into the
/// pretrain part; all samples follow their class. With overlap_classes > 0,
/// that many pretrain classes additionally contribute copies of their samples
/// to the downstream part.
ClassSplit split_classes(const LabeledDataset& ds, int n_pretrain_classes, std::uint64_t seed,
                         int overlap_classes = 0);

/// Uniform sample-level split; the server receives round(server_frac * n) rows.
std::pair<LabeledDataset, LabeledDataset> server_client_split(const LabeledDataset& ds,
                                                              double server_frac,
                                                              std::uint64_t seed);

/// Non-IID partition: per class, client proportions drawn from
/// Dirichlet(alpha), realized by largest-remainder rounding. Clients left
/// empty are repaired by taking one sample from the largest client.
std::vector<LabeledDataset> dirichlet_partition(const LabeledDataset& ds, int n_clients,
                                                double alpha, std::uint64_t seed);

/// Uniform index split with |support| = round(support_frac * n), clamped so
/// both parts stay non-empty. Requires n >= 2.
ClientShard support_query_split(const LabeledDataset& shard_data, double support_frac,
                                std::uint64_t seed, int client_id = 0);

/// Shuffle then deal round-robin into m parts; sizes differ by at most one.
std::vector<LabeledDataset> partition_equal(const LabeledDataset& server_data, int m,
                                            std::uint64_t seed);

/// Moves samples from the largest part until every part has at least min_n
/// rows. Requires sum of sizes >= min_n * parts.
void ensure_min_part_size(std::vector<LabeledDataset>& parts, int min_n);

/// Writes "f0,..,f{dim-1},label" rows for inspection.
void write_csv(const LabeledDataset& ds, const std::string& path);

}  // namespace flpre
