#include "pfedgat/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "pfedgat/rng.hpp"

namespace pfedgat {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// Static index partition over a small worker pool; each task writes only its
// own slot, so results are identical for every worker count.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    const int workers = std::min(std::max(threads, 1), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const int begin = static_cast<int>(static_cast<long long>(n) * w / workers);
            const int end = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
            for (int i = begin; i < end; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::runtime_error with_client(int id, const std::exception& e) {
    return std::runtime_error("client " + std::to_string(id) + ": " + e.what());
}

double vec_mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

double vec_std(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double m = vec_mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

std::uint64_t cohort_seed(std::uint64_t experiment_seed, int wave) {
    return wave == 0 ? experiment_seed
                     : mix_seed(experiment_seed, seed_tag::kCohort, static_cast<std::uint64_t>(wave));
}

std::uint64_t client_param_seed(const ExperimentConfig& cfg, int client_id) {
    const bool founding = client_id < cfg.initial_clients();
    if (cfg.shared_init && founding) return cfg.seed;
    return mix_seed(cfg.seed, seed_tag::kClientSlot, static_cast<std::uint64_t>(client_id) + 1);
}

void ExperimentConfig::validate() const {
    require(n_clients >= 1, "config: n_clients must be >= 1");
    require(rounds >= 1, "config: rounds must be >= 1");
    require(local_epochs >= 0, "config: local_epochs must be >= 0");
    require(batch_size >= 1, "config: batch_size must be >= 1");
    require(lr_local > 0.0, "config: lr_local must be positive");
    require(lr_gat > 0.0, "config: lr_gat must be positive");
    require(num_classes >= 1, "config: num_classes must be >= 1");
    require(samples_per_class >= 1, "config: samples_per_class must be >= 1");
    require(feature_dim >= 1, "config: feature_dim must be >= 1");
    require(class_separation >= 0.0, "config: class_separation must be >= 0");
    require(test_fraction > 0.0 && test_fraction < 1.0, "config: test_fraction must lie in (0,1)");
    require(val_fraction >= 0.0 && val_fraction + test_fraction < 1.0,
            "config: val_fraction must be >= 0 with val_fraction + test_fraction < 1");
    if (partition_mode == PartitionMode::pathological) {
        require(classes_per_client >= 1 && classes_per_client <= num_classes,
                "config: classes_per_client must lie in [1, num_classes]");
    }
    if (partition_mode == PartitionMode::dirichlet)
        require(dirichlet_beta > 0.0, "config: dirichlet_beta must be positive");
    for (int w : hidden_widths) require(w >= 1, "config: hidden_widths entries must be >= 1");
    require(gat_heads >= 1, "config: gat_heads must be >= 1");
    require(gat_dim >= 1, "config: gat_dim must be >= 1");
    require(gat_slope > 0.0 && gat_slope < 1.0, "config: gat_slope must lie in (0,1)");
    require(gat_grad_clip >= 0.0, "config: gat_grad_clip must be >= 0");
    if (join) {
        require(join->initial_clients >= 1 && join->initial_clients < n_clients,
                "config: join_initial_clients must lie in [1, n_clients)");
        require(join->join_round >= 1 && join->join_round < rounds,
                "config: join_round must lie in [1, rounds)");
    }
}

MlpSpec ExperimentConfig::mlp_spec() const {
    MlpSpec spec;
    spec.layer_widths.push_back(feature_dim);
    spec.layer_widths.insert(spec.layer_widths.end(), hidden_widths.begin(), hidden_widths.end());
    spec.layer_widths.push_back(num_classes);
    return spec;
}

PartitionSpec ExperimentConfig::partition_spec(std::uint64_t wave) const {
    PartitionSpec spec;
    spec.mode = partition_mode;
    spec.classes_per_client = classes_per_client;
    spec.beta = dirichlet_beta;
    spec.test_fraction = test_fraction;
    spec.seed = wave;
    return spec;
}

Experiment::Experiment(const ExperimentConfig& cfg, int threads)
    : cfg_(cfg), threads_(std::max(threads, 1)) {
    cfg_.validate();
    const std::uint64_t wave0 = cohort_seed(cfg_.seed, 0);
    data_ = generate_synthetic(cfg_.num_classes, cfg_.samples_per_class, cfg_.feature_dim,
                               cfg_.class_separation, wave0);
    const ClientPartition part =
        make_partition(data_, cfg_.initial_clients(), cfg_.partition_spec(wave0));
    clients_.reserve(cfg_.n_clients);
    for (int id = 0; id < cfg_.initial_clients(); ++id)
        clients_.push_back(make_client(id, data_, part.splits[id]));

    const int d = cfg_.mlp_spec().param_count();
    if (cfg_.strategy == Strategy::pfedgat)
        gat_ = init_gat(cfg_.gat_heads, d, cfg_.gat_dim, cfg_.gat_slope, cfg_.seed);
    if (cfg_.strategy == Strategy::direct_matrix)
        direct_.logits = Mat(cfg_.initial_clients(), cfg_.initial_clients());
}

ClientState Experiment::make_client(int id, const Dataset& data, const ClientSplit& split) const {
    ClientState st;
    st.id = id;
    st.params = init_params(cfg_.mlp_spec(), client_param_seed(cfg_, id));
    st.data = &data;
    st.train_idx = split.train;
    st.test_idx = split.test;
    if (cfg_.val_fraction > 0.0) {
        const int total = static_cast<int>(split.train.size() + split.test.size());
        int val_count = static_cast<int>(std::lround(cfg_.val_fraction * total));
        val_count = std::clamp(val_count, 1, static_cast<int>(split.train.size()) - 1);
        st.feedback_idx.assign(split.train.begin(), split.train.begin() + val_count);
        st.train_idx.assign(split.train.begin() + val_count, split.train.end());
    } else {
        st.feedback_idx = split.test;
    }
    st.rng = make_engine(cfg_.seed, seed_tag::kClientTrain, static_cast<std::uint64_t>(id));
    return st;
}

void Experiment::activate_joiners() {
    const int joining = cfg_.n_clients - cfg_.join->initial_clients;
    const std::uint64_t wave1 = cohort_seed(cfg_.seed, 1);
    // Joiners arrive with their own freshly drawn data, volume-matched to the
    // founding cohort's per-client share, so pre-join rounds are untouched.
    const int spc = std::max(
        1, static_cast<int>(std::lround(static_cast<double>(cfg_.samples_per_class) * joining /
                                        cfg_.join->initial_clients)));
    join_data_ = generate_synthetic(cfg_.num_classes, spc, cfg_.feature_dim,
                                    cfg_.class_separation, wave1);
    const ClientPartition part = make_partition(*join_data_, joining, cfg_.partition_spec(wave1));
    for (int j = 0; j < joining; ++j)
        clients_.push_back(make_client(cfg_.join->initial_clients + j, *join_data_, part.splits[j]));

    if (cfg_.strategy == Strategy::direct_matrix) {
        // Grow the logit matrix with zero rows/columns; the learned block is kept.
        Mat grown(cfg_.n_clients, cfg_.n_clients);
        for (int i = 0; i < direct_.logits.rows; ++i)
            for (int j = 0; j < direct_.logits.cols; ++j) grown(i, j) = direct_.logits(i, j);
        direct_.logits = std::move(grown);
    }
}

std::vector<double> Experiment::train_phase() {
    const int n = static_cast<int>(clients_.size());
    std::vector<double> train_loss(n, 0.0);
    parallel_for(n, threads_, [&](int i) {
        try {
            local_train(clients_[i], cfg_.local_epochs, cfg_.lr_local, cfg_.batch_size);
            train_loss[i] =
                evaluate(clients_[i].params, *clients_[i].data, clients_[i].train_idx).loss;
        } catch (const std::exception& e) {
            throw with_client(clients_[i].id, e);
        }
    });
    return train_loss;
}

std::vector<FlatParams> Experiment::collect_uploads() const {
    std::vector<FlatParams> uploads;
    uploads.reserve(clients_.size());
    for (const ClientState& st : clients_) uploads.push_back(st.params);
    return uploads;
}

void Experiment::distribute(const std::vector<FlatParams>& models) {
    for (std::size_t i = 0; i < clients_.size(); ++i) clients_[i].params = models[i];
}

std::vector<ClientFeedback> Experiment::feedback_phase(const std::vector<FlatParams>& received,
                                                       bool with_gradients, RoundRecord& rec) {
    const int n = static_cast<int>(clients_.size());
    std::vector<ClientFeedback> feedback(n);
    rec.test_loss.assign(n, 0.0);
    rec.test_acc.assign(n, 0.0);
    rec.feedback_loss.assign(n, 0.0);
    parallel_for(n, threads_, [&](int i) {
        try {
            const ClientState& st = clients_[i];
            const EvalResult test_eval = evaluate(received[i], *st.data, st.test_idx);
            rec.test_loss[i] = test_eval.loss;
            rec.test_acc[i] = test_eval.accuracy;
            ClientFeedback& fb = feedback[i];
            fb.test_accuracy = test_eval.accuracy;
            fb.loss = (st.feedback_idx == st.test_idx)
                          ? test_eval.loss
                          : evaluate(received[i], *st.data, st.feedback_idx).loss;
            rec.feedback_loss[i] = fb.loss;
            if (with_gradients)
                fb.grad_wrt_received =
                    loss_gradient_wrt_params(received[i], *st.data, st.feedback_idx);
        } catch (const std::exception& e) {
            throw with_client(clients_[i].id, e);
        }
    });
    return feedback;
}

void Experiment::finalize_record(RoundRecord& rec) const {
    rec.mean_test_acc = vec_mean(rec.test_acc);
    rec.std_test_acc = vec_std(rec.test_acc);
    rec.mean_train_loss = vec_mean(rec.train_loss);
    rec.total_feedback_loss = 0.0;
    for (double l : rec.feedback_loss) rec.total_feedback_loss += l;
}

RoundRecord Experiment::round_pfedgat() {
    RoundRecord rec;
    rec.train_loss = train_phase();
    const std::vector<FlatParams> uploads = collect_uploads();

    const NodeFeatures features = build_node_features(uploads);
    auto [alloc, tape] = allocation_matrix(features, gat_);
    const std::vector<FlatParams> personalized = aggregate(alloc, uploads);
    distribute(personalized);

    const std::vector<ClientFeedback> feedback = feedback_phase(personalized, true, rec);
    const GatGradients grads = backward(tape, uploads, feedback);
    apply_update(gat_, grads, cfg_.lr_gat, cfg_.gat_grad_clip);

    const std::uint64_t n = clients_.size();
    const std::uint64_t d = uploads[0].values.size();
    rec.param_bytes = 8 * n * d;
    rec.loss_bytes = 8 * n;
    rec.gradient_bytes = 8 * n * d;
    rec.allocation = alloc.R;
    return rec;
}

RoundRecord Experiment::round_local() {
    RoundRecord rec;
    rec.train_loss = train_phase();
    const std::vector<FlatParams> own = collect_uploads();
    (void)feedback_phase(own, false, rec);
    return rec;
}

RoundRecord Experiment::round_fedavg() {
    RoundRecord rec;
    rec.train_loss = train_phase();
    const std::vector<FlatParams> uploads = collect_uploads();

    // p_i = n_i / n over training-set sizes.
    double total = 0.0;
    for (const ClientState& st : clients_) total += static_cast<double>(st.train_idx.size());
    FlatParams global;
    global.spec = uploads[0].spec;
    global.values.assign(uploads[0].values.size(), 0.0);
    for (std::size_t i = 0; i < uploads.size(); ++i)
        axpy(global.values, uploads[i].values,
             static_cast<double>(clients_[i].train_idx.size()) / total);

    const std::vector<FlatParams> received(clients_.size(), global);
    distribute(received);
    (void)feedback_phase(received, false, rec);

    rec.param_bytes = 8 * static_cast<std::uint64_t>(clients_.size()) * global.values.size();
    return rec;
}

RoundRecord Experiment::round_direct_matrix() {
    RoundRecord rec;
    rec.train_loss = train_phase();
    const std::vector<FlatParams> uploads = collect_uploads();
    const int n = static_cast<int>(clients_.size());

    AllocationMatrix alloc;
    alloc.R = Mat(n, n);
    for (int i = 0; i < n; ++i) {
        const Vec row = softmax_row(direct_.logits.row(i));
        std::copy(row.begin(), row.end(), alloc.R.row(i).begin());
    }
    const std::vector<FlatParams> personalized = aggregate(alloc, uploads);
    distribute(personalized);

    const std::vector<ClientFeedback> feedback = feedback_phase(personalized, true, rec);

    // dL/dlogits: chain rule through the row softmax and the aggregation only.
    for (int i = 0; i < n; ++i) {
        Vec d_row(n);
        for (int j = 0; j < n; ++j)
            d_row[j] = dot(feedback[i].grad_wrt_received, uploads[j].values);
        const Vec d_logits = softmax_backward_row(alloc.R.row(i), d_row);
        for (int j = 0; j < n; ++j) direct_.logits(i, j) -= cfg_.lr_gat * d_logits[j];
    }

    const std::uint64_t d = uploads[0].values.size();
    rec.param_bytes = 8 * static_cast<std::uint64_t>(n) * d;
    rec.loss_bytes = 8 * static_cast<std::uint64_t>(n);
    rec.gradient_bytes = 8 * static_cast<std::uint64_t>(n) * d;
    rec.allocation = alloc.R;
    return rec;
}

RoundRecord Experiment::run_round() {
    if (round_ >= cfg_.rounds) throw std::logic_error("run_round: schedule exhausted");
    if (cfg_.join && round_ == cfg_.join->join_round) activate_joiners();
    RoundRecord rec;
    try {
        switch (cfg_.strategy) {
            case Strategy::pfedgat: rec = round_pfedgat(); break;
            case Strategy::local: rec = round_local(); break;
            case Strategy::fedavg: rec = round_fedavg(); break;
            case Strategy::direct_matrix: rec = round_direct_matrix(); break;
        }
    } catch (const std::exception& e) {
        throw std::runtime_error("round " + std::to_string(round_) + ": " + e.what());
    }
    rec.round = round_;
    finalize_record(rec);
    ++round_;
    return rec;
}

std::vector<RoundRecord> Experiment::run() {
    std::vector<RoundRecord> records;
    records.reserve(cfg_.rounds - round_);
    while (round_ < cfg_.rounds) records.push_back(run_round());
    return records;
}

std::vector<RoundRecord> run_experiment(const ExperimentConfig& cfg, int threads) {
    Experiment exp(cfg, threads);
    return exp.run();
}

}  // namespace pfedgat
