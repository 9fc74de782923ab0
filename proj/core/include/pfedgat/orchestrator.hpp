#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pfedgat/client.hpp"
#include "pfedgat/data.hpp"
#include "pfedgat/gat.hpp"
#include "pfedgat/gat_optimizer.hpp"

// The communication-round loop. One round of the attention strategy runs,
// in order: parallel local training, node-feature construction, attention,
// aggregation, distribution, client feedback, one GAT SGD step. Baselines
// share the local-training phase and differ in the server phase. Runs are a
// pure function of ExperimentConfig; the worker count never changes results.

namespace pfedgat {

enum class Strategy { pfedgat, local, fedavg, direct_matrix };

struct JoinSchedule {
    int initial_clients = 0;  // clients active from round 0
    int join_round = 0;       // first round the remaining clients take part in
};

struct ExperimentConfig {
    Strategy strategy = Strategy::pfedgat;
    int n_clients = 10;
    int rounds = 50;
    int local_epochs = 5;
    int batch_size = 64;
    double lr_local = 0.01;
    double lr_gat = 0.01;
    std::uint64_t seed = 1;

    // synthetic data
    int num_classes = 10;
    int samples_per_class = 100;
    int feature_dim = 32;
    double class_separation = 3.0;

    // partitioning
    PartitionMode partition_mode = PartitionMode::iid;
    int classes_per_client = 2;
    double dirichlet_beta = 0.5;
    double test_fraction = 0.2;
    double val_fraction = 0.0;  // > 0 carves a validation view out of the train
                                // split and measures the uploaded loss there

    // model
    std::vector<int> hidden_widths{64, 32};
    bool shared_init = true;

    // attention
    int gat_heads = 8;
    int gat_dim = 16;
    double gat_slope = 0.2;
    double gat_grad_clip = 0.0;  // 0 disables clipping

    std::optional<JoinSchedule> join;

    void validate() const;
    MlpSpec mlp_spec() const;
    PartitionSpec partition_spec(std::uint64_t wave) const;
    int initial_clients() const { return join ? join->initial_clients : n_clients; }
};

struct RoundRecord {
    int round = 0;
    // Per active client, index-aligned with client ids 0..n-1.
    std::vector<double> train_loss;
    std::vector<double> test_loss;
    std::vector<double> test_acc;
    std::vector<double> feedback_loss;  // L_i as uploaded to the server

    double mean_test_acc = 0.0;
    double std_test_acc = 0.0;
    double mean_train_loss = 0.0;
    double total_feedback_loss = 0.0;  // sum_i L_i

    std::optional<Mat> allocation;  // R, for matrix-producing strategies

    // Upload ledger for this round (8-byte reals).
    std::uint64_t param_bytes = 0;
    std::uint64_t loss_bytes = 0;
    std::uint64_t gradient_bytes = 0;

    int active_clients() const { return static_cast<int>(test_acc.size()); }
};

// Seed wiring, public so tests can reproduce the exact streams.
// wave 0 is the founding cohort, wave 1 the joining cohort.
std::uint64_t cohort_seed(std::uint64_t experiment_seed, int wave);
std::uint64_t client_param_seed(const ExperimentConfig& cfg, int client_id);

struct DirectMatrixState {
    Mat logits;  // N x N; R = row_softmax(logits)
};

class Experiment {
   public:
    explicit Experiment(const ExperimentConfig& cfg, int threads = 1);
    Experiment(const Experiment&) = delete;
    Experiment& operator=(const Experiment&) = delete;

    RoundRecord run_round();
    std::vector<RoundRecord> run();  // all remaining rounds

    int round() const { return round_; }
    const ExperimentConfig& config() const { return cfg_; }
    const std::vector<ClientState>& clients() const { return clients_; }
    const GatParams& gat() const { return gat_; }
    const DirectMatrixState& direct_matrix() const { return direct_; }
    const Dataset& founding_data() const { return data_; }

   private:
    void activate_joiners();
    ClientState make_client(int id, const Dataset& data, const ClientSplit& split) const;
    std::vector<double> train_phase();  // parallel local training, returns train losses
    std::vector<FlatParams> collect_uploads() const;
    void distribute(const std::vector<FlatParams>& models);
    // Evaluates received models, filling the record and (optionally) the
    // gradient feedback the server-side update consumes.
    std::vector<ClientFeedback> feedback_phase(const std::vector<FlatParams>& received,
                                               bool with_gradients, RoundRecord& rec);
    void finalize_record(RoundRecord& rec) const;

    RoundRecord round_pfedgat();
    RoundRecord round_local();
    RoundRecord round_fedavg();
    RoundRecord round_direct_matrix();

    ExperimentConfig cfg_;
    int threads_ = 1;
    Dataset data_;                  // founding cohort data
    std::optional<Dataset> join_data_;
    std::vector<ClientState> clients_;
    GatParams gat_;
    DirectMatrixState direct_;
    int round_ = 0;
};

// Runs the full schedule for cfg and returns one record per round.
std::vector<RoundRecord> run_experiment(const ExperimentConfig& cfg, int threads = 1);

}  // namespace pfedgat
