#include "pfedgat/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "pfedgat/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "dataset file I/O assumes a little-endian host");

namespace pfedgat {

namespace {

constexpr char kMagic[4] = {'F', 'G', 'D', 'S'};
constexpr std::uint32_t kFormatVersion = 1;

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

std::vector<int> seeded_permutation(int n, std::mt19937_64& eng) {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), eng);
    return p;
}

std::vector<std::vector<int>> indices_by_class(const Dataset& ds) {
    std::vector<std::vector<int>> by_class(ds.num_classes);
    for (int i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
    return by_class;
}

// Largest-remainder apportionment of `total` items to nonnegative shares.
// Ties go to the lower index.
std::vector<int> largest_remainder_counts(const std::vector<double>& shares, int total) {
    const int n = static_cast<int>(shares.size());
    std::vector<int> counts(n, 0);
    std::vector<std::pair<double, int>> remainders(n);
    int assigned = 0;
    for (int i = 0; i < n; ++i) {
        const double exact = shares[i] * total;
        counts[i] = static_cast<int>(std::floor(exact));
        remainders[i] = {exact - counts[i], i};
        assigned += counts[i];
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        return a.first > b.first;
    });
    for (int k = 0; k < total - assigned; ++k) counts[remainders[k].second] += 1;
    return counts;
}

void fill_splits(ClientPartition& part, const PartitionSpec& spec) {
    require(spec.test_fraction > 0.0 && spec.test_fraction < 1.0,
            "partition: test_fraction must lie in (0,1)");
    part.splits.resize(part.client_indices.size());
    for (int id = 0; id < part.n_clients(); ++id) {
        std::vector<int> idx = part.client_indices[id];
        const int n = static_cast<int>(idx.size());
        require(n >= 2, "partition: client " + std::to_string(id) +
                            " has fewer than 2 samples; dataset too small");
        auto eng = make_engine(spec.seed, seed_tag::kSplit, static_cast<std::uint64_t>(id));
        std::shuffle(idx.begin(), idx.end(), eng);
        int test_count = static_cast<int>(std::lround(spec.test_fraction * n));
        test_count = std::clamp(test_count, 1, n - 1);
        ClientSplit& split = part.splits[id];
        split.train.assign(idx.begin(), idx.end() - test_count);
        split.test.assign(idx.end() - test_count, idx.end());
    }
}

}  // namespace

void Dataset::validate() const {
    require(num_classes >= 1, "dataset: num_classes must be >= 1");
    require(features.size() == labels.size(), "dataset: features/labels length mismatch");
    require(!features.empty(), "dataset: empty");
    const std::size_t dim = features[0].size();
    std::vector<int> counts(num_classes, 0);
    for (std::size_t i = 0; i < features.size(); ++i) {
        require(features[i].size() == dim, "dataset: ragged feature rows");
        require(labels[i] >= 0 && labels[i] < num_classes, "dataset: label out of range");
        counts[labels[i]] += 1;
    }
    for (int c = 0; c < num_classes; ++c)
        require(counts[c] > 0, "dataset: class " + std::to_string(c) + " has no samples");
}

Dataset generate_synthetic(int num_classes, int samples_per_class, int feature_dim,
                           double class_separation, std::uint64_t seed) {
    require(num_classes >= 1 && samples_per_class >= 1 && feature_dim >= 1,
            "generate_synthetic: all counts must be >= 1");
    require(class_separation >= 0.0, "generate_synthetic: negative class_separation");

    auto eng = make_engine(seed, seed_tag::kData);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Vec> means(num_classes, Vec(feature_dim));
    for (int c = 0; c < num_classes; ++c)
        for (int f = 0; f < feature_dim; ++f) means[c][f] = class_separation * gauss(eng);

    Dataset ds;
    ds.num_classes = num_classes;
    ds.features.reserve(static_cast<std::size_t>(num_classes) * samples_per_class);
    ds.labels.reserve(ds.features.capacity());
    for (int c = 0; c < num_classes; ++c) {
        for (int s = 0; s < samples_per_class; ++s) {
            Vec x(feature_dim);
            for (int f = 0; f < feature_dim; ++f) x[f] = means[c][f] + gauss(eng);
            ds.features.push_back(std::move(x));
            ds.labels.push_back(c);
        }
    }
    return ds;
}

ClientPartition partition_iid(const Dataset& ds, int n_clients, const PartitionSpec& spec) {
    require(n_clients >= 1, "partition_iid: n_clients must be >= 1");
    require(ds.size() >= n_clients, "partition_iid: dataset too small");

    auto eng = make_engine(spec.seed, seed_tag::kPartition);
    std::vector<int> perm = seeded_permutation(ds.size(), eng);

    ClientPartition part;
    part.client_indices.resize(n_clients);
    const int base = ds.size() / n_clients;
    const int rem = ds.size() % n_clients;
    int cursor = 0;
    for (int id = 0; id < n_clients; ++id) {
        const int take = base + (id < rem ? 1 : 0);
        part.client_indices[id].assign(perm.begin() + cursor, perm.begin() + cursor + take);
        cursor += take;
    }
    fill_splits(part, spec);
    return part;
}

ClientPartition partition_pathological(const Dataset& ds, int n_clients, const PartitionSpec& spec) {
    const int c_total = ds.num_classes;
    const int cpc = spec.classes_per_client;
    require(n_clients >= 1, "partition_pathological: n_clients must be >= 1");
    require(cpc >= 1 && cpc <= c_total,
            "partition_pathological: classes_per_client must lie in [1, num_classes]");
    require(static_cast<long long>(cpc) * n_clients >= c_total,
            "partition_pathological: classes_per_client * n_clients < num_classes");

    auto eng = make_engine(spec.seed, seed_tag::kPartition);
    const std::vector<int> class_perm = seeded_permutation(c_total, eng);
    const std::vector<int> client_perm = seeded_permutation(n_clients, eng);

    // Wrap-around chain: slot i holds cpc consecutive (permuted) classes.
    std::vector<std::vector<int>> holders(c_total);  // class -> clients, in dealing order
    for (int slot = 0; slot < n_clients; ++slot) {
        for (int j = 0; j < cpc; ++j) {
            const int cls = class_perm[(static_cast<long long>(slot) * cpc + j) % c_total];
            holders[cls].push_back(client_perm[slot]);
        }
    }

    const auto by_class = indices_by_class(ds);
    ClientPartition part;
    part.client_indices.resize(n_clients);
    for (int cls = 0; cls < c_total; ++cls) {
        const auto& pool = by_class[cls];
        const int shards = static_cast<int>(holders[cls].size());
        require(static_cast<int>(pool.size()) >= shards,
                "partition_pathological: class " + std::to_string(cls) +
                    " has fewer samples than holding clients");
        const int base = static_cast<int>(pool.size()) / shards;
        const int rem = static_cast<int>(pool.size()) % shards;
        int cursor = 0;
        for (int k = 0; k < shards; ++k) {
            const int take = base + (k < rem ? 1 : 0);
            auto& dst = part.client_indices[holders[cls][k]];
            dst.insert(dst.end(), pool.begin() + cursor, pool.begin() + cursor + take);
            cursor += take;
        }
    }
    fill_splits(part, spec);
    return part;
}

ClientPartition partition_dirichlet(const Dataset& ds, int n_clients, const PartitionSpec& spec) {
    require(n_clients >= 1, "partition_dirichlet: n_clients must be >= 1");
    require(spec.beta > 0.0, "partition_dirichlet: beta must be positive");
    require(ds.size() >= 2 * n_clients, "partition_dirichlet: dataset too small");

    auto eng = make_engine(spec.seed, seed_tag::kPartition);
    std::gamma_distribution<double> gamma(spec.beta, 1.0);

    const auto by_class = indices_by_class(ds);
    ClientPartition part;
    part.client_indices.resize(n_clients);
    for (int cls = 0; cls < ds.num_classes; ++cls) {
        std::vector<double> q(n_clients);
        double total = 0.0;
        for (int i = 0; i < n_clients; ++i) {
            // Dir(beta * 1_N) via normalized Gamma(beta, 1) draws.
            q[i] = std::max(gamma(eng), 1e-300);
            total += q[i];
        }
        for (double& x : q) x /= total;
        const auto counts = largest_remainder_counts(q, static_cast<int>(by_class[cls].size()));
        int cursor = 0;
        for (int i = 0; i < n_clients; ++i) {
            auto& dst = part.client_indices[i];
            dst.insert(dst.end(), by_class[cls].begin() + cursor,
                       by_class[cls].begin() + cursor + counts[i]);
            cursor += counts[i];
        }
    }

    // Top up starved clients from the currently largest one.
    auto largest = [&part, n_clients]() {
        int best = 0;
        for (int i = 1; i < n_clients; ++i)
            if (part.client_indices[i].size() > part.client_indices[best].size()) best = i;
        return best;
    };
    for (int i = 0; i < n_clients; ++i) {
        while (part.client_indices[i].size() < 2) {
            const int donor = largest();
            auto& from = part.client_indices[donor];
            part.client_indices[i].push_back(from.back());
            from.pop_back();
        }
    }
    fill_splits(part, spec);
    return part;
}

ClientPartition make_partition(const Dataset& ds, int n_clients, const PartitionSpec& spec) {
    switch (spec.mode) {
        case PartitionMode::iid: return partition_iid(ds, n_clients, spec);
        case PartitionMode::pathological: return partition_pathological(ds, n_clients, spec);
        case PartitionMode::dirichlet: return partition_dirichlet(ds, n_clients, spec);
    }
    throw std::invalid_argument("make_partition: unknown mode");
}

void dataset_save(const Dataset& ds, const std::string& path) {
    ds.validate();
    require(ds.num_classes <= 0xffff, "dataset_save: too many classes for u16 labels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("dataset_save: cannot open " + path);

    const std::uint32_t header[3] = {static_cast<std::uint32_t>(ds.size()),
                                     static_cast<std::uint32_t>(ds.feature_dim()),
                                     static_cast<std::uint32_t>(ds.num_classes)};
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kFormatVersion), 4);
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (const Vec& row : ds.features)
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(double)));
    for (int label : ds.labels) {
        const std::uint16_t v = static_cast<std::uint16_t>(label);
        out.write(reinterpret_cast<const char*>(&v), 2);
    }
    if (!out) throw std::runtime_error("dataset_save: write failed for " + path);
}

Dataset dataset_load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("dataset_load: cannot open " + path);

    char magic[4];
    std::uint32_t version = 0, header[3] = {0, 0, 0};
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("dataset_load: bad magic in " + path);
    if (version != kFormatVersion)
        throw std::runtime_error("dataset_load: unsupported version in " + path);

    Dataset ds;
    ds.num_classes = static_cast<int>(header[2]);
    const std::size_t samples = header[0], dim = header[1];
    ds.features.assign(samples, Vec(dim));
    ds.labels.resize(samples);
    for (Vec& row : ds.features)
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(dim * sizeof(double)));
    for (std::size_t i = 0; i < samples; ++i) {
        std::uint16_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 2);
        ds.labels[i] = v;
    }
    if (!in) throw std::runtime_error("dataset_load: truncated file " + path);
    ds.validate();
    return ds;
}

}  // namespace pfedgat
