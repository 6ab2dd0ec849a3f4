#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fedgrains/gflownet.hpp"
#include "fedgrains/gnn.hpp"
#include "fedgrains/graph.hpp"

namespace fedgrains {

enum class Strategy { local, fedavg, fedper };

Strategy parse_strategy(const std::string& name);
std::string strategy_name(Strategy s);

// Whether the sampling budget k counts per layer in total or per root node.
enum class BudgetScope { layer_total, per_root };

struct TrainConfig {
    Strategy strategy = Strategy::fedavg;
    bool fedgrains = true;
    int rounds = 100;
    int local_epochs = 1;
    int batch_size = 0;  // 0 = all training nodes in one batch
    int k = 32;
    BudgetScope k_scope = BudgetScope::layer_total;
    double alpha = 1e5;
    double log_z = 0.0;
    double lr_gnn = 0.01;
    double lr_gfn = 0.001;
    int hidden = 128;
    int num_layers = 2;
    GfnConditioning conditioning = GfnConditioning::full_graph;
    bool sampled_eval = false;       // sample neighborhoods at eval time too
    bool couple_tb_to_gnn = false;   // let the TB residual scale the classifier step
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = hardware limit (see FEDGRAINS_THREADS)

    RewardSpec reward() const { return {alpha, log_z}; }
};

// All mutable per-client training state. The sampler parameters never leave
// this struct: aggregation only ever sees classifier weights.
struct ClientState {
    ClientDataset data;
    CsrMatrix a_norm;  // full normalized adjacency of the client subgraph
    GcnParams gnn;
    GfnParams gfn;
    AdamState adam_w1, adam_w2, adam_u1, adam_u2;
    int id = 0;
};

// The server can hold classifier weights, the strategy, and the round
// counter - nothing else, so raw data or sampler weights cannot cross the
// aggregation boundary by construction.
struct ServerState {
    GcnParams global;
    Strategy strategy = Strategy::fedavg;
    int round = 0;
};

struct ClientRoundRecord {
    int client = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double test_loss = 0.0;
    double test_acc = 0.0;
    double tb_residual = 0.0;
    int n_train = 0;
};

struct RoundMetrics {
    int round = 0;
    std::vector<ClientRoundRecord> clients;
    double mean_train_loss = 0.0;
    double mean_val_acc = 0.0;
    double std_val_acc = 0.0;
    double mean_test_acc = 0.0;
    double std_test_acc = 0.0;
    double mean_tb_residual = 0.0;
};

// The classifier starts from one shared initialization (so fedavg with a
// single client reduces to local training bit for bit); each client gets its
// own sampler initialization.
std::vector<ClientState> init_clients(std::span<const ClientDataset> datasets,
                                      const TrainConfig& cfg);

struct ClientUpdate {
    GcnParams weights;
    int n_train = 0;
    double mean_loss = 0.0;
    double mean_residual = 0.0;
    int steps = 0;
};

// One round of local training (Algorithm level: per epoch, per batch:
// rollout -> classifier loss/grads -> reward -> TB loss/grads -> Adam on
// both parameter sets). `incoming` is null for the local strategy; for
// fedper only the base layer is taken from it.
ClientUpdate run_client(ClientState& state, const GcnParams* incoming, const TrainConfig& cfg,
                        int round);

// Element-wise weighted mean with weights n_i / sum n_j.
GcnParams aggregate_fedavg(std::span<const GcnParams> params, std::span<const int> counts);
// FedAvg applied to the base layer only.
DenseMatrix aggregate_fedper(std::span<const GcnParams> params, std::span<const int> counts);

// Full-neighborhood evaluation of every client on train/val/test.
RoundMetrics evaluate_all(std::span<ClientState> clients, const TrainConfig& cfg, int round);

struct RunResult {
    std::vector<RoundMetrics> rounds;

    const RoundMetrics& final_round() const { return rounds.back(); }
};

// Full federated loop: R rounds of broadcast -> parallel local training ->
// aggregate -> evaluate. Round 0 records the initialization evaluation.
// If `csv` is set, writes "round,client,split,loss,accuracy,tb_residual"
// rows as rounds complete.
RunResult run_server(std::vector<ClientState>& clients, const TrainConfig& cfg,
                     std::ostream* csv = nullptr);

void write_metrics_header(std::ostream& os);
void write_metrics_rows(std::ostream& os, const RoundMetrics& m);

}  // namespace fedgrains
