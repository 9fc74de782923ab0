#include "pfedgat/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pfedgat {

namespace {

struct Entry {
    std::string value;
    int line = 0;
};

using Doc = std::map<std::string, Entry>;

[[noreturn]] void fail(const std::string& name, int line, const std::string& msg) {
    throw std::invalid_argument(name + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

Doc parse_doc(const std::string& text, const std::string& name) {
    Doc doc;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto comment = raw.find('#');
        if (comment != std::string::npos) raw.erase(comment);
        const std::string stripped = trim(raw);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) fail(name, line, "expected 'key = value'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) fail(name, line, "empty key");
        if (doc.count(key)) fail(name, line, "duplicate key '" + key + "'");
        doc[key] = {value, line};
    }
    return doc;
}

class Resolver {
   public:
    Resolver(Doc doc, std::string name) : doc_(std::move(doc)), name_(std::move(name)) {}

    bool has(const std::string& key) {
        seen_.insert(key);
        return doc_.count(key) != 0;
    }

    template <typename Fn>
    void with(const std::string& key, Fn&& fn) {
        seen_.insert(key);
        const auto it = doc_.find(key);
        if (it == doc_.end()) return;
        fn(it->second.value, it->second.line);
    }

    int line_of(const std::string& key) const {
        const auto it = doc_.find(key);
        return it == doc_.end() ? 0 : it->second.line;
    }

    void reject_unknown() const {
        for (const auto& [key, entry] : doc_)
            if (!seen_.count(key)) fail(name_, entry.line, "unknown key '" + key + "'");
    }

    const std::string& name() const { return name_; }

   private:
    Doc doc_;
    std::string name_;
    std::set<std::string> seen_;
};

long long parse_ll(const std::string& name, int line, const std::string& key,
                   const std::string& value) {
    long long out = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
        fail(name, line, key + ": expected an integer, got '" + value + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& name, int line, const std::string& key,
                        const std::string& value) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
        fail(name, line, key + ": expected an unsigned integer, got '" + value + "'");
    return out;
}

double parse_double(const std::string& name, int line, const std::string& key,
                    const std::string& value) {
    try {
        std::size_t used = 0;
        const double out = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        fail(name, line, key + ": expected a real number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& name, int line, const std::string& key,
                const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    fail(name, line, key + ": expected true/false, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& name, int line, const std::string& key,
                                const std::string& value) {
    std::vector<int> out;
    if (trim(value).empty()) return out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ','))
        out.push_back(static_cast<int>(parse_ll(name, line, key, trim(item))));
    return out;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::pfedgat: return "pfedgat";
        case Strategy::local: return "local";
        case Strategy::fedavg: return "fedavg";
        case Strategy::direct_matrix: return "direct_matrix";
    }
    return "?";
}

const char* partition_mode_name(PartitionMode m) {
    switch (m) {
        case PartitionMode::iid: return "iid";
        case PartitionMode::pathological: return "pathological";
        case PartitionMode::dirichlet: return "dirichlet";
    }
    return "?";
}

ExperimentConfig parse_config(const std::string& text, const std::string& name) {
    Resolver doc(parse_doc(text, name), name);
    ExperimentConfig cfg;

    const auto int_field = [&](const std::string& key, int& dst, long long lo, long long hi,
                               const char* what) {
        doc.with(key, [&](const std::string& v, int line) {
            const long long parsed = parse_ll(name, line, key, v);
            if (parsed < lo || parsed > hi) fail(name, line, key + ": " + what);
            dst = static_cast<int>(parsed);
        });
    };
    const auto double_field = [&](const std::string& key, double& dst, double lo, double hi,
                                  bool lo_open, bool hi_open, const char* what) {
        doc.with(key, [&](const std::string& v, int line) {
            const double parsed = parse_double(name, line, key, v);
            const bool below = lo_open ? parsed <= lo : parsed < lo;
            const bool above = hi_open ? parsed >= hi : parsed > hi;
            if (below || above) fail(name, line, key + ": " + what);
            dst = parsed;
        });
    };

    doc.with("strategy", [&](const std::string& v, int line) {
        if (v == "pfedgat") cfg.strategy = Strategy::pfedgat;
        else if (v == "local") cfg.strategy = Strategy::local;
        else if (v == "fedavg") cfg.strategy = Strategy::fedavg;
        else if (v == "direct_matrix") cfg.strategy = Strategy::direct_matrix;
        else fail(name, line, "strategy: expected pfedgat|local|fedavg|direct_matrix, got '" + v + "'");
    });
    int_field("n_clients", cfg.n_clients, 1, 1 << 20, "must be >= 1");
    int_field("rounds", cfg.rounds, 1, 1 << 20, "must be >= 1");
    int_field("local_epochs", cfg.local_epochs, 0, 1 << 20, "must be >= 0");
    int_field("batch_size", cfg.batch_size, 1, 1 << 20, "must be >= 1");
    double_field("lr_local", cfg.lr_local, 0.0, 1e9, true, false, "must be positive");
    double_field("lr_gat", cfg.lr_gat, 0.0, 1e9, true, false, "must be positive");
    doc.with("seed", [&](const std::string& v, int line) {
        cfg.seed = parse_u64(name, line, "seed", v);
    });

    int_field("num_classes", cfg.num_classes, 1, 0xffff, "must lie in [1, 65535]");
    int_field("samples_per_class", cfg.samples_per_class, 1, 1 << 24, "must be >= 1");
    int_field("feature_dim", cfg.feature_dim, 1, 1 << 20, "must be >= 1");
    double_field("class_separation", cfg.class_separation, 0.0, 1e9, false, false,
                 "must be >= 0");

    doc.with("partition_mode", [&](const std::string& v, int line) {
        if (v == "iid") cfg.partition_mode = PartitionMode::iid;
        else if (v == "pathological") cfg.partition_mode = PartitionMode::pathological;
        else if (v == "dirichlet") cfg.partition_mode = PartitionMode::dirichlet;
        else fail(name, line, "partition_mode: expected iid|pathological|dirichlet, got '" + v + "'");
    });
    int_field("classes_per_client", cfg.classes_per_client, 1, 0xffff, "must be >= 1");
    double_field("dirichlet_beta", cfg.dirichlet_beta, 0.0, 1e12, true, false,
                 "must be positive");
    double_field("test_fraction", cfg.test_fraction, 0.0, 1.0, true, true,
                 "must lie in (0,1)");
    double_field("val_fraction", cfg.val_fraction, 0.0, 1.0, false, true,
                 "must lie in [0,1)");

    doc.with("hidden_widths", [&](const std::string& v, int line) {
        cfg.hidden_widths = parse_int_list(name, line, "hidden_widths", v);
        for (int w : cfg.hidden_widths)
            if (w < 1) fail(name, line, "hidden_widths: entries must be >= 1");
    });
    doc.with("shared_init", [&](const std::string& v, int line) {
        cfg.shared_init = parse_bool(name, line, "shared_init", v);
    });

    int_field("gat_heads", cfg.gat_heads, 1, 1 << 16, "must be >= 1");
    int_field("gat_dim", cfg.gat_dim, 1, 1 << 20, "must be >= 1");
    double_field("gat_slope", cfg.gat_slope, 0.0, 1.0, true, true, "must lie in (0,1)");
    double_field("gat_grad_clip", cfg.gat_grad_clip, 0.0, 1e12, false, false, "must be >= 0");

    int join_initial = 0, join_round = -1;
    doc.with("join_initial_clients", [&](const std::string& v, int line) {
        join_initial = static_cast<int>(parse_ll(name, line, "join_initial_clients", v));
        if (join_initial < 0) fail(name, line, "join_initial_clients: must be >= 0");
    });
    doc.with("join_round", [&](const std::string& v, int line) {
        join_round = static_cast<int>(parse_ll(name, line, "join_round", v));
        if (join_round < -1) fail(name, line, "join_round: must be -1 (disabled) or >= 1");
    });
    if ((join_round >= 0) != (join_initial > 0)) {
        const int line = std::max(doc.line_of("join_round"), doc.line_of("join_initial_clients"));
        fail(name, line, "join_round and join_initial_clients must be set together");
    }
    if (join_round >= 0) cfg.join = JoinSchedule{join_initial, join_round};

    doc.reject_unknown();

    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(name + ": " + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

std::string emit_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "strategy = " << strategy_name(cfg.strategy) << "\n";
    out << "n_clients = " << cfg.n_clients << "\n";
    out << "rounds = " << cfg.rounds << "\n";
    out << "local_epochs = " << cfg.local_epochs << "\n";
    out << "batch_size = " << cfg.batch_size << "\n";
    out << "lr_local = " << fmt_double(cfg.lr_local) << "\n";
    out << "lr_gat = " << fmt_double(cfg.lr_gat) << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "num_classes = " << cfg.num_classes << "\n";
    out << "samples_per_class = " << cfg.samples_per_class << "\n";
    out << "feature_dim = " << cfg.feature_dim << "\n";
    out << "class_separation = " << fmt_double(cfg.class_separation) << "\n";
    out << "partition_mode = " << partition_mode_name(cfg.partition_mode) << "\n";
    out << "classes_per_client = " << cfg.classes_per_client << "\n";
    out << "dirichlet_beta = " << fmt_double(cfg.dirichlet_beta) << "\n";
    out << "test_fraction = " << fmt_double(cfg.test_fraction) << "\n";
    out << "val_fraction = " << fmt_double(cfg.val_fraction) << "\n";
    out << "hidden_widths = ";
    for (std::size_t i = 0; i < cfg.hidden_widths.size(); ++i)
        out << (i ? "," : "") << cfg.hidden_widths[i];
    out << "\n";
    out << "shared_init = " << (cfg.shared_init ? "true" : "false") << "\n";
    out << "gat_heads = " << cfg.gat_heads << "\n";
    out << "gat_dim = " << cfg.gat_dim << "\n";
    out << "gat_slope = " << fmt_double(cfg.gat_slope) << "\n";
    out << "gat_grad_clip = " << fmt_double(cfg.gat_grad_clip) << "\n";
    if (cfg.join) {
        out << "join_initial_clients = " << cfg.join->initial_clients << "\n";
        out << "join_round = " << cfg.join->join_round << "\n";
    }
    return out.str();
}

}  // namespace pfedgat
