#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedgrains/config.hpp"
#include "fedgrains/dataset_io.hpp"
#include "fedgrains/fedsim.hpp"
#include "fedgrains/partition.hpp"
#include "fedgrains/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fedgrains;

// Exit codes: 0 ok, 2 config error, 3 data error, 4 runtime error.
namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        seeds.push_back(std::stoull(item));
    }
    if (seeds.empty()) throw ConfigError("seed list is empty");
    return seeds;
}

std::string client_dir_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "client_%03d", index);
    return buf;
}

int cmd_ingest(const std::string& content, const std::string& cites, const std::string& out) {
    const Graph g = ingest_planetoid(content, cites);
    save_dataset(g, out);
    std::cout << "ingested " << g.num_nodes << " nodes, " << g.num_edges() << " edges, "
              << g.num_classes << " classes -> " << out << "\n";
    return kExitOk;
}

int cmd_synth(const std::string& preset, std::uint64_t seed, const std::string& out) {
    const Graph g = make_synth(synth_preset(preset), seed);
    save_dataset(g, out);
    std::cout << "generated " << preset << ": " << g.num_nodes << " nodes, " << g.num_edges()
              << " edges, " << g.num_classes << " classes -> " << out << "\n";
    return kExitOk;
}

int cmd_partition(ExperimentConfig cfg) {
    validate_partition_config(cfg);
    const Graph g = load_dataset(cfg.dataset);

    SplitRatios ratios{cfg.ratios[0], cfg.ratios[1], cfg.ratios[2]};
    ScenarioSpec spec;
    spec.kind = cfg.mode == "disjoint" ? ScenarioKind::disjoint : ScenarioKind::overlapping;
    spec.num_parts = cfg.clients;
    spec.samples_per_part = cfg.samples_per_part;
    spec.sample_fraction = cfg.fraction;
    spec.seed = cfg.seeds.front();
    const std::vector<ClientDataset> clients = build_scenario(g, spec, ratios);

    fs::create_directories(cfg.out);
    for (std::size_t i = 0; i < clients.size(); ++i) {
        save_client_dataset(clients[i], fs::path(cfg.out) / client_dir_name(static_cast<int>(i)));
    }

    double mean_cc = 0.0;
    for (const auto& c : clients) mean_cc += clustering_coefficient(c.graph);
    mean_cc /= static_cast<double>(clients.size());

    json report;
    report["num_clients"] = clients.size();
    report["mode"] = cfg.mode;
    report["missing_links"] = count_missing_links(g, clients);
    report["label_heterogeneity"] =
        clients.size() >= 2 ? label_heterogeneity(clients) : 0.0;
    report["degree_heterogeneity"] =
        clients.size() >= 2 ? degree_heterogeneity(clients) : 0.0;
    report["mean_clustering_coefficient"] = mean_cc;
    {
        std::ofstream os(fs::path(cfg.out) / "scenario.json", std::ios::trunc);
        os << report.dump(2) << "\n";
    }
    save_config_file(cfg, fs::path(cfg.out) / "resolved_config.json");
    std::cout << "wrote " << clients.size() << " clients to " << cfg.out
              << " (missing links: " << report["missing_links"] << ")\n";
    return kExitOk;
}

int cmd_train(ExperimentConfig cfg) {
    validate_train_config(cfg);
    const std::vector<ClientDataset> datasets = load_scenario(cfg.scenario);

    fs::create_directories(cfg.out);
    save_config_file(cfg, fs::path(cfg.out) / "resolved_config.json");

    json summary;
    summary["strategy"] = cfg.strategy;
    summary["fedgrains"] = cfg.fedgrains;
    summary["alpha"] = cfg.alpha;
    summary["gfn_lr"] = cfg.gfn_lr;
    summary["k"] = cfg.k;
    summary["rounds"] = cfg.rounds;
    summary["scenario"] = cfg.scenario;
    json per_seed = json::array();

    double val_sum = 0, test_sum = 0;
    std::vector<double> finals_val, finals_test;
    for (const std::uint64_t seed : cfg.seeds) {
        const TrainConfig tcfg = to_train_config(cfg, seed);
        std::vector<ClientState> clients = init_clients(datasets, tcfg);

        const fs::path seed_dir = fs::path(cfg.out) / ("seed_" + std::to_string(seed));
        fs::create_directories(seed_dir);
        std::ofstream csv(seed_dir / "metrics.csv", std::ios::trunc);
        const RunResult result = run_server(clients, tcfg, &csv);

        for (const auto& c : clients) {
            const fs::path cdir = seed_dir / client_dir_name(c.id);
            fs::create_directories(cdir);
            save_gcn(c.gnn, cdir / "model.bin");
            if (tcfg.fedgrains) save_gcn(c.gfn, cdir / "gfn.bin");
        }

        const RoundMetrics& last = result.final_round();
        json row;
        row["seed"] = seed;
        row["final_val_acc"] = last.mean_val_acc;
        row["final_test_acc"] = last.mean_test_acc;
        row["final_train_loss"] = last.mean_train_loss;
        per_seed.push_back(row);
        finals_val.push_back(last.mean_val_acc);
        finals_test.push_back(last.mean_test_acc);
        val_sum += last.mean_val_acc;
        test_sum += last.mean_test_acc;
        std::cout << "seed " << seed << ": val " << last.mean_val_acc << " test "
                  << last.mean_test_acc << "\n";
    }

    const double n = static_cast<double>(cfg.seeds.size());
    const double val_mean = val_sum / n;
    const double test_mean = test_sum / n;
    double val_var = 0, test_var = 0;
    for (std::size_t i = 0; i < finals_val.size(); ++i) {
        val_var += (finals_val[i] - val_mean) * (finals_val[i] - val_mean);
        test_var += (finals_test[i] - test_mean) * (finals_test[i] - test_mean);
    }
    summary["per_seed"] = per_seed;
    summary["val_acc_mean"] = val_mean;
    summary["val_acc_std"] = std::sqrt(val_var / n);
    summary["test_acc_mean"] = test_mean;
    summary["test_acc_std"] = std::sqrt(test_var / n);
    {
        std::ofstream os(fs::path(cfg.out) / "summary.json", std::ios::trunc);
        os << summary.dump(2) << "\n";
    }
    std::cout << "test accuracy " << test_mean << " +/- " << std::sqrt(test_var / n) << " over "
              << cfg.seeds.size() << " seed(s)\n";
    return kExitOk;
}

struct ReportRow {
    std::string scenario;
    std::string strategy;
    bool fedgrains = false;
    double alpha = 0, gfn_lr = 0;
    std::vector<double> test_finals;
    std::vector<double> val_finals;
};

int cmd_report(const std::vector<std::string>& dirs, const std::string& out_csv) {
    std::map<std::string, ReportRow> rows;
    std::string scenario;
    for (const auto& dir : dirs) {
        std::ifstream in(fs::path(dir) / "summary.json");
        if (!in) throw DataError("no summary.json in " + dir);
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded()) throw DataError("malformed summary.json in " + dir);
        const std::string sc = j.value("scenario", std::string{});
        if (scenario.empty()) scenario = sc;
        if (sc != scenario)
            throw ConfigError("report: mixed scenarios (" + scenario + " vs " + sc + ")");
        ReportRow row;
        row.scenario = sc;
        row.strategy = j.value("strategy", std::string{"?"});
        row.fedgrains = j.value("fedgrains", false);
        row.alpha = j.value("alpha", 0.0);
        row.gfn_lr = j.value("gfn_lr", 0.0);
        std::ostringstream key;
        key << row.strategy << '|' << row.fedgrains << '|' << row.alpha << '|' << row.gfn_lr;
        auto& slot = rows.emplace(key.str(), row).first->second;
        for (const auto& ps : j.value("per_seed", json::array())) {
            slot.test_finals.push_back(ps.value("final_test_acc", 0.0));
            slot.val_finals.push_back(ps.value("final_val_acc", 0.0));
        }
    }

    auto mean_std = [](const std::vector<double>& v) {
        const double m =
            std::accumulate(v.begin(), v.end(), 0.0) / std::max<std::size_t>(1, v.size());
        double var = 0;
        for (double x : v) var += (x - m) * (x - m);
        return std::pair<double, double>(m, std::sqrt(var / std::max<std::size_t>(1, v.size())));
    };

    double best = -1;
    std::string best_key;
    for (const auto& [key, row] : rows) {
        const auto [m, s] = mean_std(row.test_finals);
        (void)s;
        if (m > best) {
            best = m;
            best_key = key;
        }
    }

    std::ostringstream text;
    std::ostringstream csv;
    csv << "strategy,fedgrains,alpha,gfn_lr,runs,test_acc_mean,test_acc_std,val_acc_mean,val_"
           "acc_std,best\n";
    text << "scenario: " << scenario << "\n";
    for (const auto& [key, row] : rows) {
        const auto [tm, ts] = mean_std(row.test_finals);
        const auto [vm, vs] = mean_std(row.val_finals);
        const bool is_best = key == best_key;
        char line[256];
        std::snprintf(line, sizeof(line), "%-8s fedgrains=%-3s alpha=%-8g gfn_lr=%-8g test %.2f +/- %.2f  val %.2f +/- %.2f %s",
                      row.strategy.c_str(), row.fedgrains ? "on" : "off", row.alpha, row.gfn_lr,
                      100.0 * tm, 100.0 * ts, 100.0 * vm, 100.0 * vs, is_best ? "*" : "");
        text << line << "\n";
        csv << row.strategy << ',' << (row.fedgrains ? "on" : "off") << ',' << row.alpha << ','
            << row.gfn_lr << ',' << row.test_finals.size() << ',' << tm << ',' << ts << ',' << vm
            << ',' << vs << ',' << (is_best ? 1 : 0) << "\n";
    }
    std::cout << text.str();
    if (!out_csv.empty()) {
        std::ofstream os(out_csv, std::ios::trunc);
        os << csv.str();
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fedgrains: personalized subgraph federated learning simulator"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Convert Planetoid-style text files");
    std::string content_file, cites_file, ingest_out;
    ingest->add_option("--content", content_file, "path to the .content file")->required();
    ingest->add_option("--cites", cites_file, "path to the .cites file")->required();
    ingest->add_option("--out", ingest_out, "output dataset directory")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark dataset");
    std::string synth_preset_name = "cora";
    std::string synth_out;
    std::uint64_t synth_seed = 1;
    synth->add_option("--preset", synth_preset_name, "cora | citeseer | tiny");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--out", synth_out, "output dataset directory")->required();

    // partition
    auto* part = app.add_subcommand("partition", "Partition a dataset into client subgraphs");
    std::string part_config, part_dataset, part_mode, part_out, part_ratios;
    int part_clients = -1, part_samples = -1;
    double part_fraction = -1, part_eps = -1;
    std::string part_seed;
    part->add_option("--config", part_config, "resolved config json to start from");
    part->add_option("--dataset", part_dataset, "dataset directory");
    part->add_option("--mode", part_mode, "disjoint | overlapping");
    part->add_option("--clients", part_clients, "number of parts");
    part->add_option("--samples-per-part", part_samples, "overlapping samples per part");
    part->add_option("--fraction", part_fraction, "overlapping node fraction");
    part->add_option("--eps", part_eps, "balance slack");
    part->add_option("--ratios", part_ratios, "train,val,test ratios");
    part->add_option("--seed", part_seed, "partition seed");
    part->add_option("--out", part_out, "output scenario directory");

    // train
    auto* train = app.add_subcommand("train", "Run federated training on a scenario");
    std::string tr_config, tr_scenario, tr_strategy, tr_fedgrains, tr_out, tr_seeds, tr_kscope,
        tr_cond;
    int tr_rounds = -1, tr_epochs = -1, tr_k = -1, tr_hidden = -1, tr_threads = -1,
        tr_batch = -1;
    double tr_alpha = -1, tr_lr = -1, tr_gfn_lr = -1, tr_logz = 0;
    bool tr_logz_set = false, tr_sampled_eval = false, tr_couple = false;
    train->add_option("--config", tr_config, "resolved config json to start from");
    train->add_option("--scenario", tr_scenario, "scenario directory from `partition`");
    train->add_option("--strategy", tr_strategy, "local | fedavg | fedper");
    train->add_option("--fedgrains", tr_fedgrains, "on | off");
    train->add_option("--rounds", tr_rounds, "communication rounds");
    train->add_option("--local-epochs", tr_epochs, "local epochs per round");
    train->add_option("--batch-size", tr_batch, "batch size (0 = full)");
    train->add_option("--k", tr_k, "sampling budget per layer");
    train->add_option("--k-scope", tr_kscope, "layer_total | per_root");
    train->add_option("--alpha", tr_alpha, "reward scaling");
    train->add_option("--log-z", tr_logz, "constant log-normalizer")->each([&](const std::string&) {
        tr_logz_set = true;
    });
    train->add_option("--lr", tr_lr, "classifier learning rate");
    train->add_option("--gfn-lr", tr_gfn_lr, "sampler learning rate");
    train->add_option("--hidden", tr_hidden, "hidden width");
    train->add_option("--gfn-conditioning", tr_cond, "full | masked");
    train->add_flag("--sampled-eval", tr_sampled_eval, "sample neighborhoods at eval time");
    train->add_flag("--couple-tb-to-gnn", tr_couple, "couple the TB residual into the GNN step");
    train->add_option("--seed", tr_seeds, "seed or comma-separated seed list");
    train->add_option("--threads", tr_threads, "client-level thread cap");
    train->add_option("--out", tr_out, "output directory");

    // report
    auto* report = app.add_subcommand("report", "Aggregate training runs into a table");
    std::vector<std::string> report_dirs;
    std::string report_csv;
    report->add_option("dirs", report_dirs, "train output directories")->required();
    report->add_option("--csv", report_csv, "write the table as csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: config: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (*ingest) return cmd_ingest(content_file, cites_file, ingest_out);
        if (*synth) return cmd_synth(synth_preset_name, synth_seed, synth_out);
        if (*part) {
            ExperimentConfig cfg;
            if (!part_config.empty()) cfg = load_config_file(part_config);
            if (!part_dataset.empty()) cfg.dataset = part_dataset;
            if (!part_mode.empty()) cfg.mode = part_mode;
            if (part->count("--clients")) cfg.clients = part_clients;
            if (part->count("--samples-per-part")) cfg.samples_per_part = part_samples;
            if (part->count("--fraction")) cfg.fraction = part_fraction;
            if (part->count("--eps")) cfg.balance_eps = part_eps;
            if (!part_seed.empty()) cfg.seeds = parse_seed_list(part_seed);
            if (!part_ratios.empty()) {
                std::vector<double> r;
                std::stringstream ss(part_ratios);
                std::string item;
                while (std::getline(ss, item, ',')) r.push_back(std::stod(item));
                cfg.ratios = r;
            }
            if (!part_out.empty()) cfg.out = part_out;
            return cmd_partition(std::move(cfg));
        }
        if (*train) {
            ExperimentConfig cfg;
            if (!tr_config.empty()) cfg = load_config_file(tr_config);
            if (!tr_scenario.empty()) cfg.scenario = tr_scenario;
            if (!tr_strategy.empty()) cfg.strategy = tr_strategy;
            if (!tr_fedgrains.empty()) {
                if (tr_fedgrains != "on" && tr_fedgrains != "off")
                    throw ConfigError("train: --fedgrains must be on or off");
                cfg.fedgrains = tr_fedgrains == "on";
            }
            if (train->count("--rounds")) cfg.rounds = tr_rounds;
            if (train->count("--local-epochs")) cfg.local_epochs = tr_epochs;
            if (train->count("--batch-size")) cfg.batch_size = tr_batch;
            if (train->count("--k")) cfg.k = tr_k;
            if (!tr_kscope.empty()) cfg.k_scope = tr_kscope;
            if (train->count("--alpha")) cfg.alpha = tr_alpha;
            if (tr_logz_set) cfg.log_z = tr_logz;
            if (train->count("--lr")) cfg.lr = tr_lr;
            if (train->count("--gfn-lr")) cfg.gfn_lr = tr_gfn_lr;
            if (train->count("--hidden")) cfg.hidden = tr_hidden;
            if (!tr_cond.empty()) cfg.gfn_conditioning = tr_cond;
            if (tr_sampled_eval) cfg.sampled_eval = true;
            if (tr_couple) cfg.couple_tb_to_gnn = true;
            if (!tr_seeds.empty()) cfg.seeds = parse_seed_list(tr_seeds);
            if (train->count("--threads")) cfg.threads = tr_threads;
            if (!tr_out.empty()) cfg.out = tr_out;
            return cmd_train(std::move(cfg));
        }
        if (*report) return cmd_report(report_dirs, report_csv);
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
