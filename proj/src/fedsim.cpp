#include "fedgrains/fedsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "fedgrains/parallel.hpp"

namespace fedgrains {

int thread_budget(int requested) {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    if (const char* env = std::getenv("FEDGRAINS_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    if (requested > 0) n = std::min(n, requested);
    return std::max(1, n);
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

Strategy parse_strategy(const std::string& name) {
    if (name == "local") return Strategy::local;
    if (name == "fedavg") return Strategy::fedavg;
    if (name == "fedper") return Strategy::fedper;
    throw std::invalid_argument("unknown strategy: " + name);
}

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::local: return "local";
        case Strategy::fedavg: return "fedavg";
        case Strategy::fedper: return "fedper";
    }
    return "?";
}

std::vector<ClientState> init_clients(std::span<const ClientDataset> datasets,
                                      const TrainConfig& cfg) {
    if (datasets.empty()) throw std::invalid_argument("init_clients: no clients");
    const int d = datasets.front().graph.num_features();
    const int c = datasets.front().graph.num_classes;
    const GcnParams shared_init = init_gcn(d, cfg.hidden, c, cfg.seed);

    std::vector<ClientState> clients(datasets.size());
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        ClientState& s = clients[i];
        s.id = static_cast<int>(i);
        s.data = datasets[i];
        if (s.data.splits.train.empty())
            throw std::invalid_argument("init_clients: client has an empty training mask");
        s.a_norm = normalized_adjacency(s.data.graph);
        s.gnn = shared_init;
        s.gfn = init_gfn(d, cfg.hidden, derive_seed(cfg.seed, {seed_tag::init_gfn,
                                                              static_cast<std::uint64_t>(i)}));
        s.adam_w1 = AdamState(s.gnn.w1.rows, s.gnn.w1.cols);
        s.adam_w2 = AdamState(s.gnn.w2.rows, s.gnn.w2.cols);
        s.adam_u1 = AdamState(s.gfn.w1.rows, s.gfn.w1.cols);
        s.adam_u2 = AdamState(s.gfn.w2.rows, s.gfn.w2.cols);
    }
    return clients;
}

namespace {

constexpr std::uint64_t kTagBatch = 0x10;
constexpr std::uint64_t kTagEval = 0x11;

struct SplitEval {
    double loss = 0.0;
    double acc = 0.0;
};

SplitEval eval_rows(const DenseMatrix& logits, std::span<const int> labels_by_row,
                    std::span<const int> rows) {
    SplitEval out;
    if (rows.empty()) return out;
    int correct = 0;
    for (int r : rows) {
        const double* lrow = logits.row(r);
        int arg = 0;
        for (int j = 1; j < logits.cols; ++j) {
            if (lrow[j] > lrow[arg]) arg = j;
        }
        if (arg == labels_by_row[static_cast<std::size_t>(r)]) correct++;
    }
    out.acc = static_cast<double>(correct) / static_cast<double>(rows.size());
    out.loss = softmax_xent(logits, labels_by_row, rows).loss;
    return out;
}

// Full-neighborhood evaluation: one forward, three masks. With sampled_eval
// each split gets its own rollout-built neighborhood instead.
void evaluate_client(ClientState& s, const TrainConfig& cfg, int round, ClientRoundRecord& rec) {
    const Graph& g = s.data.graph;
    if (!cfg.sampled_eval) {
        const AdjacencySequence seq = full_adjacency_sequence(s.a_norm, cfg.num_layers);
        const GcnForward fwd = gcn_forward(s.gnn, g.features, seq);
        const SplitEval tr = eval_rows(fwd.logits, g.labels, s.data.splits.train);
        const SplitEval va = eval_rows(fwd.logits, g.labels, s.data.splits.val);
        const SplitEval te = eval_rows(fwd.logits, g.labels, s.data.splits.test);
        rec.train_acc = tr.acc;
        rec.val_loss = va.loss;
        rec.val_acc = va.acc;
        rec.test_loss = te.loss;
        rec.test_acc = te.acc;
        if (round == 0) rec.train_loss = tr.loss;
        return;
    }
    int split_idx = 0;
    for (const std::vector<int>* mask : {&s.data.splits.train, &s.data.splits.val,
                                         &s.data.splits.test}) {
        SplitEval ev;
        if (!mask->empty()) {
            Rng rng(derive_seed(cfg.seed, {kTagEval, static_cast<std::uint64_t>(s.id),
                                           static_cast<std::uint64_t>(round),
                                           static_cast<std::uint64_t>(split_idx)}));
            const int k_eff = cfg.k_scope == BudgetScope::per_root
                                  ? cfg.k * static_cast<int>(mask->size())
                                  : cfg.k;
            const Trajectory traj = rollout(s.gfn, g, s.a_norm, *mask, std::max(1, k_eff),
                                            cfg.num_layers, rng, cfg.conditioning);
            const GcnForward fwd = gcn_forward(s.gnn, g.features, traj.adj);
            const auto& out_nodes = traj.adj.output_nodes();
            std::vector<int> row_labels(out_nodes.size());
            std::vector<int> rows(out_nodes.size());
            for (std::size_t r = 0; r < out_nodes.size(); ++r) {
                row_labels[r] = g.labels[static_cast<std::size_t>(out_nodes[r])];
                rows[r] = static_cast<int>(r);
            }
            ev = eval_rows(fwd.logits, row_labels, rows);
        }
        if (split_idx == 0) {
            rec.train_acc = ev.acc;
            if (round == 0) rec.train_loss = ev.loss;
        } else if (split_idx == 1) {
            rec.val_loss = ev.loss;
            rec.val_acc = ev.acc;
        } else {
            rec.test_loss = ev.loss;
            rec.test_acc = ev.acc;
        }
        split_idx++;
    }
}

}  // namespace

ClientUpdate run_client(ClientState& state, const GcnParams* incoming, const TrainConfig& cfg,
                        int round) {
    if (incoming) {
        if (cfg.strategy == Strategy::fedper) {
            if (!incoming->w1.same_shape(state.gnn.w1))
                throw std::invalid_argument("run_client: incoming base layer shape mismatch");
            state.gnn.w1 = incoming->w1;
        } else {
            if (!incoming->w1.same_shape(state.gnn.w1) || !incoming->w2.same_shape(state.gnn.w2))
                throw std::invalid_argument("run_client: incoming parameter shape mismatch");
            state.gnn = *incoming;
        }
    }

    const Graph& g = state.data.graph;
    const std::vector<int>& train = state.data.splits.train;
    if (train.empty()) throw std::invalid_argument("run_client: empty training mask");
    const RewardSpec reward = cfg.reward();

    ClientUpdate update;
    update.n_train = static_cast<int>(train.size());

    for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        std::vector<std::vector<int>> batches;
        if (cfg.batch_size <= 0 || cfg.batch_size >= static_cast<int>(train.size())) {
            batches.push_back(train);
        } else {
            std::vector<int> order = train;
            Rng brng(derive_seed(cfg.seed, {kTagBatch, static_cast<std::uint64_t>(state.id),
                                            static_cast<std::uint64_t>(round),
                                            static_cast<std::uint64_t>(epoch)}));
            brng.shuffle(order);
            for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
                const std::size_t end = std::min(order.size(), at + cfg.batch_size);
                std::vector<int> b(order.begin() + at, order.begin() + end);
                std::sort(b.begin(), b.end());
                batches.push_back(std::move(b));
            }
        }

        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const std::vector<int>& batch = batches[bi];
            Trajectory traj;
            AdjacencySequence full_seq;
            const AdjacencySequence* adj = nullptr;
            if (cfg.fedgrains) {
                Rng rng(derive_seed(cfg.seed, {seed_tag::rollout,
                                               static_cast<std::uint64_t>(state.id),
                                               static_cast<std::uint64_t>(round),
                                               static_cast<std::uint64_t>(epoch),
                                               static_cast<std::uint64_t>(bi)}));
                const int k_eff = cfg.k_scope == BudgetScope::per_root
                                      ? cfg.k * static_cast<int>(batch.size())
                                      : cfg.k;
                traj = rollout(state.gfn, g, state.a_norm, batch, std::max(1, k_eff),
                               cfg.num_layers, rng, cfg.conditioning);
                adj = &traj.adj;
            } else {
                full_seq = full_adjacency_sequence(state.a_norm, cfg.num_layers);
                adj = &full_seq;
            }

            GcnGrad grad = gcn_loss_and_grad(state.gnn, g.features, *adj, g.labels, batch);
            update.mean_loss += grad.loss;
            update.steps += 1;

            double residual = 0.0;
            if (cfg.fedgrains) {
                traj.log_reward = log_reward(grad.loss, reward);
                residual = tb_residual(traj, reward);
                update.mean_residual += residual;
                if (cfg.couple_tb_to_gnn) {
                    // d/dW of (loss + residual^2): the residual is linear in
                    // alpha * loss, so the classifier gradient picks up a
                    // (1 + 2 r alpha) factor.
                    const double scale = 1.0 + 2.0 * residual * reward.alpha;
                    for (double& x : grad.gw1.data) x *= scale;
                    for (double& x : grad.gw2.data) x *= scale;
                }
            }

            adam_step(state.gnn.w1, grad.gw1, state.adam_w1, cfg.lr_gnn);
            adam_step(state.gnn.w2, grad.gw2, state.adam_w2, cfg.lr_gnn);

            if (cfg.fedgrains) {
                const GfnGrad gg = tb_grad(traj, reward, state.gfn, g, state.a_norm,
                                           cfg.conditioning);
                adam_step(state.gfn.w1, gg.gu1, state.adam_u1, cfg.lr_gfn);
                adam_step(state.gfn.w2, gg.gu2, state.adam_u2, cfg.lr_gfn);
            }
        }
    }

    if (update.steps > 0) {
        update.mean_loss /= update.steps;
        update.mean_residual /= update.steps;
    }
    update.weights = state.gnn;
    return update;
}

GcnParams aggregate_fedavg(std::span<const GcnParams> params, std::span<const int> counts) {
    if (params.empty() || params.size() != counts.size())
        throw std::invalid_argument("aggregate_fedavg: bad inputs");
    long long total = 0;
    for (int c : counts) total += c;
    if (total <= 0) throw std::invalid_argument("aggregate_fedavg: zero total sample count");

    GcnParams out;
    out.w1 = DenseMatrix(params[0].w1.rows, params[0].w1.cols);
    out.w2 = DenseMatrix(params[0].w2.rows, params[0].w2.cols);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double w = static_cast<double>(counts[i]) / static_cast<double>(total);
        if (!params[i].w1.same_shape(out.w1) || !params[i].w2.same_shape(out.w2))
            throw std::invalid_argument("aggregate_fedavg: shape mismatch");
        for (std::size_t j = 0; j < out.w1.data.size(); ++j)
            out.w1.data[j] += w * params[i].w1.data[j];
        for (std::size_t j = 0; j < out.w2.data.size(); ++j)
            out.w2.data[j] += w * params[i].w2.data[j];
    }
    return out;
}

DenseMatrix aggregate_fedper(std::span<const GcnParams> params, std::span<const int> counts) {
    if (params.empty() || params.size() != counts.size())
        throw std::invalid_argument("aggregate_fedper: bad inputs");
    long long total = 0;
    for (int c : counts) total += c;
    if (total <= 0) throw std::invalid_argument("aggregate_fedper: zero total sample count");

    DenseMatrix out(params[0].w1.rows, params[0].w1.cols);
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].w1.same_shape(out))
            throw std::invalid_argument("aggregate_fedper: shape mismatch");
        const double w = static_cast<double>(counts[i]) / static_cast<double>(total);
        for (std::size_t j = 0; j < out.data.size(); ++j) out.data[j] += w * params[i].w1.data[j];
    }
    return out;
}

namespace {

void finish_round_stats(RoundMetrics& m) {
    const double inv = 1.0 / static_cast<double>(m.clients.size());
    double va = 0, ta = 0, tl = 0, tb = 0;
    for (const auto& c : m.clients) {
        va += c.val_acc;
        ta += c.test_acc;
        tl += c.train_loss;
        tb += c.tb_residual;
    }
    m.mean_val_acc = va * inv;
    m.mean_test_acc = ta * inv;
    m.mean_train_loss = tl * inv;
    m.mean_tb_residual = tb * inv;
    double sv = 0, st = 0;
    for (const auto& c : m.clients) {
        sv += (c.val_acc - m.mean_val_acc) * (c.val_acc - m.mean_val_acc);
        st += (c.test_acc - m.mean_test_acc) * (c.test_acc - m.mean_test_acc);
    }
    m.std_val_acc = std::sqrt(sv * inv);
    m.std_test_acc = std::sqrt(st * inv);
}

}  // namespace

RoundMetrics evaluate_all(std::span<ClientState> clients, const TrainConfig& cfg, int round) {
    RoundMetrics m;
    m.round = round;
    m.clients.resize(clients.size());
    parallel_for(static_cast<int>(clients.size()), thread_budget(cfg.threads), [&](int i) {
        ClientRoundRecord& rec = m.clients[static_cast<std::size_t>(i)];
        rec.client = static_cast<int>(i);
        rec.n_train = static_cast<int>(clients[i].data.splits.train.size());
        evaluate_client(clients[i], cfg, round, rec);
    });
    finish_round_stats(m);
    return m;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

void write_metrics_header(std::ostream& os) {
    os << "round,client,split,loss,accuracy,tb_residual\n";
}

void write_metrics_rows(std::ostream& os, const RoundMetrics& m) {
    for (const auto& c : m.clients) {
        os << m.round << ',' << c.client << ",train," << fmt(c.train_loss) << ','
           << fmt(c.train_acc) << ',' << fmt(c.tb_residual) << '\n';
        os << m.round << ',' << c.client << ",val," << fmt(c.val_loss) << ',' << fmt(c.val_acc)
           << ",\n";
        os << m.round << ',' << c.client << ",test," << fmt(c.test_loss) << ',' << fmt(c.test_acc)
           << ",\n";
    }
}

RunResult run_server(std::vector<ClientState>& clients, const TrainConfig& cfg,
                     std::ostream* csv) {
    if (clients.empty()) throw std::invalid_argument("run_server: no clients");

    ServerState server;
    server.strategy = cfg.strategy;
    server.global = clients.front().gnn;  // shared initialization (see init_clients)

    RunResult result;
    if (csv) write_metrics_header(*csv);

    RoundMetrics init_eval = evaluate_all(clients, cfg, 0);
    if (csv) write_metrics_rows(*csv, init_eval);
    result.rounds.push_back(std::move(init_eval));

    const int threads = thread_budget(cfg.threads);
    std::vector<ClientUpdate> updates(clients.size());

    for (int round = 1; round <= cfg.rounds; ++round) {
        server.round = round;
        const GcnParams* incoming = cfg.strategy == Strategy::local ? nullptr : &server.global;

        parallel_for(static_cast<int>(clients.size()), threads, [&](int i) {
            updates[static_cast<std::size_t>(i)] =
                run_client(clients[static_cast<std::size_t>(i)], incoming, cfg, round);
        });

        if (cfg.strategy != Strategy::local) {
            std::vector<GcnParams> snapshots;
            std::vector<int> counts;
            snapshots.reserve(updates.size());
            counts.reserve(updates.size());
            for (const auto& u : updates) {
                snapshots.push_back(u.weights);
                counts.push_back(u.n_train);
            }
            if (cfg.strategy == Strategy::fedavg) {
                server.global = aggregate_fedavg(snapshots, counts);
            } else {
                server.global.w1 = aggregate_fedper(snapshots, counts);
            }
        }

        RoundMetrics m = evaluate_all(clients, cfg, round);
        for (std::size_t i = 0; i < updates.size(); ++i) {
            m.clients[i].train_loss = updates[i].mean_loss;
            m.clients[i].tb_residual = updates[i].mean_residual;
        }
        finish_round_stats(m);
        if (csv) write_metrics_rows(*csv, m);
        result.rounds.push_back(std::move(m));
    }
    return result;
}

}  // namespace fedgrains
