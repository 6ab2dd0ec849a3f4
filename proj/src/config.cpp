#include "fedgrains/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace fedgrains {

using nlohmann::json;

void validate_partition_config(const ExperimentConfig& cfg) {
    if (cfg.dataset.empty()) throw ConfigError("partition: --dataset is required");
    if (cfg.mode != "disjoint" && cfg.mode != "overlapping")
        throw ConfigError("partition: mode must be disjoint or overlapping");
    if (cfg.clients < 1) throw ConfigError("partition: clients must be >= 1");
    if (cfg.samples_per_part < 1) throw ConfigError("partition: samples-per-part must be >= 1");
    if (cfg.fraction <= 0.0 || cfg.fraction > 1.0)
        throw ConfigError("partition: fraction must be in (0, 1]");
    if (cfg.balance_eps < 0.0) throw ConfigError("partition: balance-eps must be >= 0");
    if (cfg.ratios.size() != 3) throw ConfigError("partition: ratios must have 3 entries");
    double sum = 0.0;
    for (double r : cfg.ratios) {
        if (r <= 0.0) throw ConfigError("partition: split ratios must be positive");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("partition: split ratios must sum to 1");
    if (cfg.out.empty()) throw ConfigError("partition: --out is required");
}

void validate_train_config(const ExperimentConfig& cfg) {
    if (cfg.scenario.empty()) throw ConfigError("train: --scenario is required");
    parse_strategy(cfg.strategy);  // throws std::invalid_argument on unknown
    if (cfg.rounds < 0) throw ConfigError("train: rounds must be >= 0");
    if (cfg.local_epochs < 1) throw ConfigError("train: local-epochs must be >= 1");
    if (cfg.batch_size < 0) throw ConfigError("train: batch-size must be >= 0");
    if (cfg.k < 0) throw ConfigError("train: k must be >= 0");
    if (cfg.fedgrains && cfg.k < 1) throw ConfigError("train: k must be >= 1 when fedgrains is on");
    if (cfg.k_scope != "layer_total" && cfg.k_scope != "per_root")
        throw ConfigError("train: k-scope must be layer_total or per_root");
    if (cfg.alpha <= 0.0) throw ConfigError("train: alpha must be > 0");
    if (cfg.lr < 0.0) throw ConfigError("train: lr must be >= 0");
    if (cfg.gfn_lr < 0.0) throw ConfigError("train: gfn-lr must be >= 0");
    if (cfg.hidden < 1) throw ConfigError("train: hidden must be >= 1");
    if (cfg.gfn_conditioning != "full" && cfg.gfn_conditioning != "masked")
        throw ConfigError("train: gfn-conditioning must be full or masked");
    if (cfg.seeds.empty()) throw ConfigError("train: at least one seed is required");
    if (cfg.out.empty()) throw ConfigError("train: --out is required");
    if (cfg.threads < 0) throw ConfigError("train: threads must be >= 0");
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["dataset"] = cfg.dataset;
    j["mode"] = cfg.mode;
    j["clients"] = cfg.clients;
    j["samples_per_part"] = cfg.samples_per_part;
    j["fraction"] = cfg.fraction;
    j["balance_eps"] = cfg.balance_eps;
    j["ratios"] = cfg.ratios;
    j["scenario"] = cfg.scenario;
    j["strategy"] = cfg.strategy;
    j["fedgrains"] = cfg.fedgrains;
    j["rounds"] = cfg.rounds;
    j["local_epochs"] = cfg.local_epochs;
    j["batch_size"] = cfg.batch_size;
    j["k"] = cfg.k;
    j["k_scope"] = cfg.k_scope;
    j["alpha"] = cfg.alpha;
    j["log_z"] = cfg.log_z;
    j["lr"] = cfg.lr;
    j["gfn_lr"] = cfg.gfn_lr;
    j["hidden"] = cfg.hidden;
    j["gfn_conditioning"] = cfg.gfn_conditioning;
    j["sampled_eval"] = cfg.sampled_eval;
    j["couple_tb_to_gnn"] = cfg.couple_tb_to_gnn;
    j["seeds"] = cfg.seeds;
    j["out"] = cfg.out;
    j["threads"] = cfg.threads;
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config: malformed json");

    static const std::set<std::string> known = {
        "dataset", "mode", "clients", "samples_per_part", "fraction", "balance_eps", "ratios",
        "scenario", "strategy", "fedgrains", "rounds", "local_epochs", "batch_size", "k",
        "k_scope", "alpha", "log_z", "lr", "gfn_lr", "hidden", "gfn_conditioning",
        "sampled_eval", "couple_tb_to_gnn", "seeds", "out", "threads"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "'");
    }

    ExperimentConfig cfg;
    try {
        cfg.dataset = j.value("dataset", cfg.dataset);
        cfg.mode = j.value("mode", cfg.mode);
        cfg.clients = j.value("clients", cfg.clients);
        cfg.samples_per_part = j.value("samples_per_part", cfg.samples_per_part);
        cfg.fraction = j.value("fraction", cfg.fraction);
        cfg.balance_eps = j.value("balance_eps", cfg.balance_eps);
        cfg.ratios = j.value("ratios", cfg.ratios);
        cfg.scenario = j.value("scenario", cfg.scenario);
        cfg.strategy = j.value("strategy", cfg.strategy);
        cfg.fedgrains = j.value("fedgrains", cfg.fedgrains);
        cfg.rounds = j.value("rounds", cfg.rounds);
        cfg.local_epochs = j.value("local_epochs", cfg.local_epochs);
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        cfg.k = j.value("k", cfg.k);
        cfg.k_scope = j.value("k_scope", cfg.k_scope);
        cfg.alpha = j.value("alpha", cfg.alpha);
        cfg.log_z = j.value("log_z", cfg.log_z);
        cfg.lr = j.value("lr", cfg.lr);
        cfg.gfn_lr = j.value("gfn_lr", cfg.gfn_lr);
        cfg.hidden = j.value("hidden", cfg.hidden);
        cfg.gfn_conditioning = j.value("gfn_conditioning", cfg.gfn_conditioning);
        cfg.sampled_eval = j.value("sampled_eval", cfg.sampled_eval);
        cfg.couple_tb_to_gnn = j.value("couple_tb_to_gnn", cfg.couple_tb_to_gnn);
        cfg.seeds = j.value("seeds", cfg.seeds);
        cfg.out = j.value("out", cfg.out);
        cfg.threads = j.value("threads", cfg.threads);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("config: cannot open " + file.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json_text(text);
}

void save_config_file(const ExperimentConfig& cfg, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw ConfigError("config: cannot write " + file.string());
    out << config_to_json(cfg);
}

TrainConfig to_train_config(const ExperimentConfig& cfg, std::uint64_t seed) {
    TrainConfig t;
    t.strategy = parse_strategy(cfg.strategy);
    t.fedgrains = cfg.fedgrains;
    t.rounds = cfg.rounds;
    t.local_epochs = cfg.local_epochs;
    t.batch_size = cfg.batch_size;
    t.k = cfg.k;
    t.k_scope = cfg.k_scope == "per_root" ? BudgetScope::per_root : BudgetScope::layer_total;
    t.alpha = cfg.alpha;
    t.log_z = cfg.log_z;
    t.lr_gnn = cfg.lr;
    t.lr_gfn = cfg.gfn_lr;
    t.hidden = cfg.hidden;
    t.conditioning = cfg.gfn_conditioning == "masked" ? GfnConditioning::masked_state
                                                      : GfnConditioning::full_graph;
    t.sampled_eval = cfg.sampled_eval;
    t.couple_tb_to_gnn = cfg.couple_tb_to_gnn;
    t.seed = seed;
    t.threads = cfg.threads;
    return t;
}

}  // namespace fedgrains
