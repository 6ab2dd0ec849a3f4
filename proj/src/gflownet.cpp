#include "fedgrains/gflownet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedgrains {

GfnParams init_gfn(int in_dim, int hidden, std::uint64_t seed) {
    return init_gcn(in_dim, hidden, 1, derive_seed(seed, {seed_tag::init_gfn}));
}

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

DenseMatrix masked_features(const DenseMatrix& x, std::span<const int> state) {
    DenseMatrix out(x.rows, x.cols);
    for (int v : state) {
        std::copy(x.row(v), x.row(v) + x.cols, out.row(v));
    }
    return out;
}

DenseMatrix policy_logits(const GfnParams& gfn, const Graph& g, const CsrMatrix& a_norm,
                          std::span<const int> state, GfnConditioning cond) {
    const AdjacencySequence seq = full_adjacency_sequence(a_norm, 2);
    if (cond == GfnConditioning::full_graph) {
        return gcn_forward(gfn, g.features, seq).logits;
    }
    return gcn_forward(gfn, masked_features(g.features, state), seq).logits;
}

std::vector<int> candidate_set(const Graph& g, std::span<const int> state) {
    std::vector<std::uint8_t> in_state(static_cast<std::size_t>(g.num_nodes), 0);
    for (int v : state) in_state[static_cast<std::size_t>(v)] = 1;
    std::vector<int> cands;
    for (int v : state) {
        for (int u : g.neighbors(v)) {
            if (!in_state[static_cast<std::size_t>(u)]) {
                in_state[static_cast<std::size_t>(u)] = 1;
                cands.push_back(u);
            }
        }
    }
    std::sort(cands.begin(), cands.end());
    return cands;
}

std::vector<int> merge_sorted(std::span<const int> a, std::span<const int> b) {
    std::vector<int> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace

InclusionProbs inclusion_probs(const GfnParams& gfn, const Graph& g, const CsrMatrix& a_norm,
                               std::span<const int> state, GfnConditioning cond) {
    InclusionProbs out;
    out.candidates = candidate_set(g, state);
    if (out.candidates.empty()) return out;
    const DenseMatrix logits = policy_logits(gfn, g, a_norm, state, cond);
    out.probs.reserve(out.candidates.size());
    for (int v : out.candidates) {
        out.probs.push_back(clamp_prob(1.0 / (1.0 + std::exp(-logits.at(v, 0)))));
    }
    return out;
}

double forward_log_prob(std::span<const double> probs, std::span<const std::uint8_t> chosen) {
    double s = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        s += chosen[i] ? std::log(probs[i]) : std::log(1.0 - probs[i]);
    }
    return s;
}

Trajectory rollout(const GfnParams& gfn, const Graph& g, const CsrMatrix& a_norm,
                   std::span<const int> roots, int k, int num_layers, Rng& rng,
                   GfnConditioning cond) {
    if (roots.empty()) throw std::invalid_argument("rollout: empty root set");
    if (k < 1) throw std::invalid_argument("rollout: budget k must be >= 1");

    Trajectory traj;
    traj.roots.assign(roots.begin(), roots.end());
    std::sort(traj.roots.begin(), traj.roots.end());
    traj.roots.erase(std::unique(traj.roots.begin(), traj.roots.end()), traj.roots.end());

    // Full-graph conditioning needs a single policy pass for all layers.
    DenseMatrix logits;
    if (cond == GfnConditioning::full_graph) {
        logits = policy_logits(gfn, g, a_norm, traj.roots, cond);
    }

    std::vector<int> state = traj.roots;
    std::vector<std::vector<int>> sets;
    sets.push_back(state);

    for (int layer = 0; layer < num_layers; ++layer) {
        TrajectoryLayer rec;
        rec.candidates = candidate_set(g, state);
        if (!rec.candidates.empty()) {
            if (cond == GfnConditioning::masked_state) {
                logits = policy_logits(gfn, g, a_norm, state, cond);
            }
            rec.probs.reserve(rec.candidates.size());
            for (int v : rec.candidates) {
                rec.probs.push_back(clamp_prob(1.0 / (1.0 + std::exp(-logits.at(v, 0)))));
            }
            std::vector<double> scores(rec.candidates.size());
            for (std::size_t i = 0; i < scores.size(); ++i) {
                scores[i] = std::log(rec.probs[i]) + rng.gumbel();
            }
            const int take = std::min<int>(k, static_cast<int>(rec.candidates.size()));
            const std::vector<int> picked = top_k(scores, take);
            rec.chosen.assign(rec.candidates.size(), 0);
            std::vector<int> new_nodes;
            new_nodes.reserve(picked.size());
            for (int idx : picked) {
                rec.chosen[static_cast<std::size_t>(idx)] = 1;
                new_nodes.push_back(rec.candidates[static_cast<std::size_t>(idx)]);
            }
            traj.sum_log_pf += forward_log_prob(rec.probs, rec.chosen);
            state = merge_sorted(state, new_nodes);
        }
        rec.state = state;
        sets.push_back(state);
        traj.layers.push_back(std::move(rec));
    }

    // GNN layer l aggregates S^{L-l+1} activations into S^{L-l}.
    traj.adj.layers.resize(static_cast<std::size_t>(num_layers));
    for (int l = 0; l < num_layers; ++l) {
        LayerAdjacency& la = traj.adj.layers[static_cast<std::size_t>(l)];
        la.in_nodes = sets[static_cast<std::size_t>(num_layers - l)];
        la.out_nodes = sets[static_cast<std::size_t>(num_layers - l - 1)];
        la.mat = restrict_adjacency(a_norm, la.out_nodes, la.in_nodes);
    }
    return traj;
}

double log_reward(double classification_loss, const RewardSpec& spec) {
    if (classification_loss < 0.0) throw std::invalid_argument("log_reward: negative loss");
    return -spec.alpha * classification_loss;
}

double tb_residual(const Trajectory& traj, const RewardSpec& spec) {
    if (!traj.log_reward.has_value())
        throw std::invalid_argument("tb_residual: trajectory has no reward");
    return spec.log_z + traj.sum_log_pf - *traj.log_reward;
}

double tb_loss(const Trajectory& traj, const RewardSpec& spec) {
    if (traj.layers.empty()) throw std::invalid_argument("tb_loss: incomplete trajectory");
    const double r = tb_residual(traj, spec);
    return r * r;
}

GfnGrad tb_grad(const Trajectory& traj, const RewardSpec& spec, const GfnParams& gfn,
                const Graph& g, const CsrMatrix& a_norm, GfnConditioning cond) {
    const double r = tb_residual(traj, spec);

    GfnGrad grad;
    grad.gu1 = DenseMatrix(gfn.w1.rows, gfn.w1.cols);
    grad.gu2 = DenseMatrix(gfn.w2.rows, gfn.w2.cols);
    if (r == 0.0) return grad;

    const AdjacencySequence seq = full_adjacency_sequence(a_norm, 2);

    // d log p / d logit = 1-p for selected, -p for unselected; zero where the
    // clamp is active. Scaled by d(r^2)/dr = 2r.
    auto layer_dlogits = [&](const TrajectoryLayer& layer, DenseMatrix& dlogits) {
        for (std::size_t i = 0; i < layer.candidates.size(); ++i) {
            const double p = layer.probs[i];
            if (p <= kProbClamp || p >= 1.0 - kProbClamp) continue;
            const double coef = layer.chosen[i] ? (1.0 - p) : -p;
            dlogits.at(layer.candidates[i], 0) += 2.0 * r * coef;
        }
    };

    if (cond == GfnConditioning::full_graph) {
        const GcnForward fwd = gcn_forward(gfn, g.features, seq);
        DenseMatrix dlogits(g.num_nodes, 1);
        for (const auto& layer : traj.layers) layer_dlogits(layer, dlogits);
        const GcnGrad b = gcn_backward(gfn, seq, fwd, dlogits);
        grad.gu1 = b.gw1;
        grad.gu2 = b.gw2;
        return grad;
    }

    // Masked conditioning: each layer saw different inputs, so backprop per
    // layer against the state that generated it.
    std::span<const int> state(traj.roots);
    for (const auto& layer : traj.layers) {
        if (!layer.candidates.empty()) {
            const DenseMatrix x = masked_features(g.features, state);
            const GcnForward fwd = gcn_forward(gfn, x, seq);
            DenseMatrix dlogits(g.num_nodes, 1);
            layer_dlogits(layer, dlogits);
            const GcnGrad b = gcn_backward(gfn, seq, fwd, dlogits);
            for (std::size_t i = 0; i < grad.gu1.data.size(); ++i) grad.gu1.data[i] += b.gw1.data[i];
            for (std::size_t i = 0; i < grad.gu2.data.size(); ++i) grad.gu2.data[i] += b.gw2.data[i];
        }
        state = std::span<const int>(layer.state);
    }
    return grad;
}

}  // namespace fedgrains
