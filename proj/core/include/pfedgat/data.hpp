#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pfedgat/numerics.hpp"

// Labeled classification datasets and their assignment to clients under
// the three heterogeneity regimes: iid, pathological (fixed number of
// classes per client) and dirichlet (per-class client shares drawn from
// a symmetric Dirichlet).

namespace pfedgat {

struct Dataset {
    std::vector<Vec> features;  // each of length feature_dim()
    std::vector<int> labels;    // in [0, num_classes)
    int num_classes = 0;

    int size() const { return static_cast<int>(features.size()); }
    int feature_dim() const { return features.empty() ? 0 : static_cast<int>(features[0].size()); }
    void validate() const;
};

enum class PartitionMode { iid, pathological, dirichlet };

struct PartitionSpec {
    PartitionMode mode = PartitionMode::iid;
    int classes_per_client = 2;  // pathological only
    double beta = 0.5;           // dirichlet only
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct ClientSplit {
    std::vector<int> train;
    std::vector<int> test;
};

struct ClientPartition {
    std::vector<std::vector<int>> client_indices;  // disjoint, covering the dataset
    std::vector<ClientSplit> splits;               // per-client train/test (disjoint, nonempty)

    int n_clients() const { return static_cast<int>(client_indices.size()); }
};

// Gaussian class clusters: class means drawn once from the seeded stream and
// scaled by class_separation, unit-variance isotropic noise around them.
// Samples are grouped by class (class c occupies indices [c*spc, (c+1)*spc)).
Dataset generate_synthetic(int num_classes, int samples_per_class, int feature_dim,
                           double class_separation, std::uint64_t seed);

// Seeded permutation split into contiguous chunks; the first (size % n)
// clients receive one extra sample.
ClientPartition partition_iid(const Dataset& ds, int n_clients, const PartitionSpec& spec);

// Each client receives shards from exactly classes_per_client distinct
// classes. Class sets are assigned by a wrap-around chain over seeded class
// and client permutations; each class's samples are sliced (in dataset
// order) into one shard per holding client.
ClientPartition partition_pathological(const Dataset& ds, int n_clients, const PartitionSpec& spec);

// For each class, client shares q ~ Dir(beta * 1_N); samples are dealt by
// largest-remainder rounding of the shares. Clients ending with fewer than
// 2 samples are topped up by taking one sample from the currently largest
// client so a train/test split stays feasible.
ClientPartition partition_dirichlet(const Dataset& ds, int n_clients, const PartitionSpec& spec);

// Dispatch on spec.mode.
ClientPartition make_partition(const Dataset& ds, int n_clients, const PartitionSpec& spec);

// Flat binary dataset file:
//   "FGDS" | version u32 | samples u32 | feature_dim u32 | classes u32
//   samples*feature_dim f64 features | samples u16 labels
// All fields little-endian.
void dataset_save(const Dataset& ds, const std::string& path);
Dataset dataset_load(const std::string& path);

}  // namespace pfedgat
