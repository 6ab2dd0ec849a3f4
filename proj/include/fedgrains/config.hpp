#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedgrains/fedsim.hpp"

namespace fedgrains {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Resolved experiment configuration. Every defaulted field is written back to
// disk next to the outputs, so re-running from the persisted file reproduces
// the run byte for byte.
struct ExperimentConfig {
    // partition stage
    std::string dataset;
    std::string mode = "disjoint";
    int clients = 5;
    int samples_per_part = 5;
    double fraction = 0.5;
    double balance_eps = 0.05;
    std::vector<double> ratios = {0.2, 0.4, 0.4};

    // train stage
    std::string scenario;
    std::string strategy = "fedavg";
    bool fedgrains = true;
    int rounds = 100;
    int local_epochs = 1;
    int batch_size = 0;
    int k = 32;
    std::string k_scope = "layer_total";
    double alpha = 1e5;
    double log_z = 0.0;
    double lr = 0.01;
    double gfn_lr = 0.001;
    int hidden = 128;
    std::string gfn_conditioning = "full";
    bool sampled_eval = false;
    bool couple_tb_to_gnn = false;
    std::vector<std::uint64_t> seeds = {1};

    std::string out;
    int threads = 0;
};

void validate_partition_config(const ExperimentConfig& cfg);
void validate_train_config(const ExperimentConfig& cfg);

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& file);
void save_config_file(const ExperimentConfig& cfg, const std::filesystem::path& file);

// The per-seed low-level configuration for run_server.
TrainConfig to_train_config(const ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace fedgrains
