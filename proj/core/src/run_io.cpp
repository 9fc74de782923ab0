#include "pfedgat/run_io.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "pfedgat/config.hpp"
#include "pfedgat/version.hpp"

namespace fs = std::filesystem;

namespace pfedgat {

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string metrics_csv(const std::vector<RoundRecord>& records) {
    std::string out = "round,client_id,train_loss,test_loss,test_acc\n";
    for (const RoundRecord& rec : records) {
        for (int i = 0; i < rec.active_clients(); ++i) {
            out += std::to_string(rec.round) + "," + std::to_string(i) + "," +
                   format_real(rec.train_loss[i]) + "," + format_real(rec.test_loss[i]) + "," +
                   format_real(rec.test_acc[i]) + "\n";
        }
    }
    return out;
}

std::string summary_csv(const std::vector<RoundRecord>& records) {
    std::string out =
        "round,active_clients,mean_test_acc,std_test_acc,mean_train_loss,total_loss\n";
    for (const RoundRecord& rec : records) {
        out += std::to_string(rec.round) + "," + std::to_string(rec.active_clients()) + "," +
               format_real(rec.mean_test_acc) + "," + format_real(rec.std_test_acc) + "," +
               format_real(rec.mean_train_loss) + "," + format_real(rec.total_feedback_loss) +
               "\n";
    }
    return out;
}

std::string comms_csv(const std::vector<RoundRecord>& records) {
    std::string out = "round,active_clients,param_bytes,loss_bytes,gradient_bytes\n";
    for (const RoundRecord& rec : records) {
        out += std::to_string(rec.round) + "," + std::to_string(rec.active_clients()) + "," +
               std::to_string(rec.param_bytes) + "," + std::to_string(rec.loss_bytes) + "," +
               std::to_string(rec.gradient_bytes) + "\n";
    }
    return out;
}

std::string matrix_csv(const Mat& m) {
    std::string out;
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) {
            if (j) out += ",";
            out += format_real(m(i, j));
        }
        out += "\n";
    }
    return out;
}

nlohmann::ordered_json manifest_json(const ExperimentConfig& cfg, const std::string& config_path,
                                     const std::string& out_dir, double duration_seconds,
                                     int threads) {
    nlohmann::ordered_json m;
    m["tool_version"] = kToolVersion;
    m["config_path"] = config_path;
    m["out_dir"] = out_dir;
    m["resolved_config_file"] = "resolved.cfg";
    m["duration_seconds"] = duration_seconds;
    m["threads"] = threads;

    m["strategy"] = strategy_name(cfg.strategy);
    m["n_clients"] = cfg.n_clients;
    m["rounds"] = cfg.rounds;
    m["local_epochs"] = cfg.local_epochs;
    m["batch_size"] = cfg.batch_size;
    m["lr_local"] = cfg.lr_local;
    m["lr_gat"] = cfg.lr_gat;
    m["seed"] = cfg.seed;
    m["num_classes"] = cfg.num_classes;
    m["samples_per_class"] = cfg.samples_per_class;
    m["feature_dim"] = cfg.feature_dim;
    m["class_separation"] = cfg.class_separation;
    m["partition_mode"] = partition_mode_name(cfg.partition_mode);
    m["classes_per_client"] = cfg.classes_per_client;
    m["dirichlet_beta"] = cfg.dirichlet_beta;
    m["test_fraction"] = cfg.test_fraction;
    m["val_fraction"] = cfg.val_fraction;
    m["hidden_widths"] = cfg.hidden_widths;
    m["shared_init"] = cfg.shared_init;
    m["gat_heads"] = cfg.gat_heads;
    m["gat_dim"] = cfg.gat_dim;
    m["gat_slope"] = cfg.gat_slope;
    m["gat_grad_clip"] = cfg.gat_grad_clip;
    m["join_initial_clients"] = cfg.join ? cfg.join->initial_clients : 0;
    m["join_round"] = cfg.join ? cfg.join->join_round : -1;

    const int d = cfg.mlp_spec().param_count();
    const bool uses_feedback_gradients =
        cfg.strategy == Strategy::pfedgat || cfg.strategy == Strategy::direct_matrix;
    m["model_param_count"] = d;
    m["per_round_loss_scalar_bytes"] = uses_feedback_gradients ? 8 * cfg.n_clients : 0;
    m["per_round_param_bytes"] =
        cfg.strategy == Strategy::local ? 0 : 8ll * cfg.n_clients * d;
    m["per_round_feedback_gradient_bytes"] =
        uses_feedback_gradients ? 8ll * cfg.n_clients * d : 0;
    m["comm_gradient_overhead_flagged"] = uses_feedback_gradients;
    if (uses_feedback_gradients) {
        m["comm_note"] =
            "the server-side matrix update consumes per-client loss gradients "
            "(per_round_feedback_gradient_bytes), which scalar-loss uploads of "
            "per_round_loss_scalar_bytes cannot carry; this simulator computes the "
            "gradients in-process and reports both figures";
    }
    return m;
}

struct StagedDir {
    fs::path tmp;
    fs::path final;

    explicit StagedDir(const std::string& out_dir) : final(out_dir) {
        if (fs::exists(final))
            throw std::runtime_error("output directory already exists: " + out_dir);
        tmp = final;
        tmp += ".tmp";
        fs::remove_all(tmp);
        fs::create_directories(tmp);
    }
    ~StagedDir() {
        std::error_code ec;
        fs::remove_all(tmp, ec);  // no-op after a successful commit
    }
    void commit() { fs::rename(tmp, final); }
};

void export_run(const ExperimentConfig& cfg, const std::vector<RoundRecord>& records,
                const std::string& config_path, const std::string& out_dir,
                double duration_seconds, int threads) {
    StagedDir stage(out_dir);

    write_file(stage.tmp / "metrics.csv", metrics_csv(records));
    write_file(stage.tmp / "summary.csv", summary_csv(records));
    write_file(stage.tmp / "comms.csv", comms_csv(records));
    write_file(stage.tmp / "resolved.cfg", emit_config(cfg));

    bool any_alloc = false;
    for (const RoundRecord& rec : records) any_alloc = any_alloc || rec.allocation.has_value();
    if (any_alloc) {
        fs::create_directories(stage.tmp / "alloc");
        for (const RoundRecord& rec : records)
            if (rec.allocation)
                write_file(stage.tmp / "alloc" / ("round_" + std::to_string(rec.round) + ".csv"),
                           matrix_csv(*rec.allocation));
    }

    write_file(stage.tmp / "manifest.json",
               manifest_json(cfg, config_path, out_dir, duration_seconds, threads).dump(2) + "\n");
    stage.commit();
}

}  // namespace

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOverrides& ov) {
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.rounds) cfg.rounds = *ov.rounds;
    if (cfg.join && cfg.join->join_round >= cfg.rounds)
        throw std::invalid_argument(
            "config: rounds override leaves join_round outside [1, rounds)");
    cfg.validate();
    return cfg;
}

void run_to_dir(const std::string& config_path, const std::string& out_dir,
                const RunOverrides& ov) {
    const ExperimentConfig cfg = apply_overrides(load_config(config_path), ov);
    if (fs::exists(out_dir))
        throw std::runtime_error("output directory already exists: " + out_dir);
    const auto start = std::chrono::steady_clock::now();
    const std::vector<RoundRecord> records = run_experiment(cfg, ov.threads);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    export_run(cfg, records, config_path, out_dir, seconds, ov.threads);
}

void compare_to_dir(const std::vector<std::string>& config_paths, const std::string& out_dir,
                    const RunOverrides& ov) {
    if (config_paths.empty()) throw std::invalid_argument("compare: no configs given");
    if (fs::exists(out_dir))
        throw std::runtime_error("output directory already exists: " + out_dir);

    struct Row {
        std::string path, strategy;
        double mean_acc = 0.0, std_acc = 0.0;
    };
    std::vector<Row> rows;
    for (const std::string& path : config_paths) {
        const ExperimentConfig cfg = apply_overrides(load_config(path), ov);
        const std::vector<RoundRecord> records = run_experiment(cfg, ov.threads);
        const RoundRecord& last = records.back();
        rows.push_back({path, strategy_name(cfg.strategy), last.mean_test_acc,
                        last.std_test_acc});
    }
    double best = rows[0].mean_acc;
    for (const Row& r : rows) best = std::max(best, r.mean_acc);

    std::string csv = "config,strategy,final_mean_test_acc,final_std_test_acc,best\n";
    for (const Row& r : rows) {
        csv += r.path + "," + r.strategy + "," + format_real(r.mean_acc) + "," +
               format_real(r.std_acc) + "," + (r.mean_acc == best ? "1" : "0") + "\n";
    }

    StagedDir stage(out_dir);
    write_file(stage.tmp / "comparison.csv", csv);
    stage.commit();
}

}  // namespace pfedgat
