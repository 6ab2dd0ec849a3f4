#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fedgrains/gnn.hpp"
#include "fedgrains/graph.hpp"

namespace fedgrains {

// The sampler policy is a two-layer GCN over the client subgraph emitting one
// inclusion logit per node.
using GfnParams = GcnParams;

GfnParams init_gfn(int in_dim, int hidden, std::uint64_t seed);

// What the policy network sees when scoring candidates: the full client
// subgraph (default) or features masked down to the current state.
enum class GfnConditioning { full_graph, masked_state };

// Inclusion probabilities are sigmoid logits clamped to
// [kProbClamp, 1 - kProbClamp] so log terms stay finite.
inline constexpr double kProbClamp = 1e-6;

struct RewardSpec {
    double alpha = 1e5;
    double log_z = 0.0;
};

struct TrajectoryLayer {
    std::vector<int> candidates;       // neighbors of the previous state, ascending
    std::vector<double> probs;         // clamped inclusion probabilities
    std::vector<std::uint8_t> chosen;  // aligned with candidates
    std::vector<int> state;            // cumulative sampled set after this layer
};

// Layered rollout record. sum_log_pf accumulates the forward transition
// log-probabilities; the backward policy is identically one (the state embeds
// its own history) and contributes nothing. log_reward stays unset until the
// classifier loss of this exact trajectory is known.
struct Trajectory {
    std::vector<int> roots;  // initial state, ascending
    std::vector<TrajectoryLayer> layers;
    AdjacencySequence adj;   // aggregation chain for the classifier
    double sum_log_pf = 0.0;
    std::optional<double> log_reward;
};

struct InclusionProbs {
    std::vector<int> candidates;
    std::vector<double> probs;
};

// Runs the policy GCN and returns clamped probabilities for the candidates
// neighbors(state) \ state. Empty state-neighborhood yields empty vectors.
InclusionProbs inclusion_probs(const GfnParams& gfn, const Graph& g, const CsrMatrix& a_norm,
                               std::span<const int> state,
                               GfnConditioning cond = GfnConditioning::full_graph);

// sum over selected of ln p, plus sum over unselected of ln(1-p).
double forward_log_prob(std::span<const double> probs, std::span<const std::uint8_t> chosen);

// Gumbel-top-k rollout: per layer, select min(k, |candidates|) candidates by
// ln p + Gumbel noise, grow the state, and restrict the client adjacency to
// the sampled sets.
Trajectory rollout(const GfnParams& gfn, const Graph& g, const CsrMatrix& a_norm,
                   std::span<const int> roots, int k, int num_layers, Rng& rng,
                   GfnConditioning cond = GfnConditioning::full_graph);

// log R = -alpha * loss. Kept in log domain throughout: alpha = 1e5 would
// underflow exp(-alpha * loss) for any loss above a few 1e-3.
double log_reward(double classification_loss, const RewardSpec& spec);

// log Z + sum log P_F - log R
double tb_residual(const Trajectory& traj, const RewardSpec& spec);

// Squared residual. Throws if the trajectory is incomplete (missing layers or
// reward).
double tb_loss(const Trajectory& traj, const RewardSpec& spec);

struct GfnGrad {
    DenseMatrix gu1;
    DenseMatrix gu2;
};

// d tb_loss / d policy weights for the recorded selections; the Gumbel
// perturbation and the classifier loss are constants here.
GfnGrad tb_grad(const Trajectory& traj, const RewardSpec& spec, const GfnParams& gfn,
                const Graph& g, const CsrMatrix& a_norm,
                GfnConditioning cond = GfnConditioning::full_graph);

}  // namespace fedgrains
