#include "fedgrains/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace fedgrains {

namespace {

long long balance_cap(int num_nodes, int num_parts, double eps) {
    const double ideal = std::ceil(static_cast<double>(num_nodes) / num_parts);
    return static_cast<long long>(std::floor((1.0 + eps) * ideal + 1e-9));
}

}  // namespace

WeightedGraph to_weighted(const Graph& g) {
    WeightedGraph w;
    w.num_nodes = g.num_nodes;
    w.row_ptr = g.row_ptr;
    w.col_idx = g.col_idx;
    w.edge_weight.assign(g.col_idx.size(), 1);
    w.node_weight.assign(static_cast<std::size_t>(g.num_nodes), 1);
    return w;
}

CoarsenResult coarsen(const WeightedGraph& g, Rng& rng, long long max_node_weight) {
    const int n = g.num_nodes;
    std::vector<int> match(static_cast<std::size_t>(n), -1);
    std::vector<int> visit(static_cast<std::size_t>(n));
    std::iota(visit.begin(), visit.end(), 0);
    rng.shuffle(visit);

    int matched_pairs = 0;
    for (int u : visit) {
        if (match[u] != -1) continue;
        int best = -1;
        long long best_w = -1;
        for (int p = g.row_ptr[u]; p < g.row_ptr[u + 1]; ++p) {
            const int v = g.col_idx[p];
            if (v == u || match[v] != -1) continue;
            if (max_node_weight > 0 && g.node_weight[u] + g.node_weight[v] > max_node_weight)
                continue;
            const long long w = g.edge_weight[p];
            if (w > best_w || (w == best_w && v < best)) {
                best = v;
                best_w = w;
            }
        }
        if (best != -1) {
            match[u] = best;
            match[best] = u;
            matched_pairs++;
        }
    }

    CoarsenResult res;
    if (matched_pairs == 0) {
        res.coarse = g;
        res.projection.resize(static_cast<std::size_t>(n));
        std::iota(res.projection.begin(), res.projection.end(), 0);
        res.fixed_point = true;
        return res;
    }

    // Coarse ids assigned in fine-node order so the mapping does not depend
    // on the random visit order beyond who matched whom.
    res.projection.assign(static_cast<std::size_t>(n), -1);
    int next = 0;
    for (int v = 0; v < n; ++v) {
        if (res.projection[v] != -1) continue;
        res.projection[v] = next;
        if (match[v] != -1) res.projection[match[v]] = next;
        next++;
    }

    WeightedGraph& c = res.coarse;
    c.num_nodes = next;
    c.node_weight.assign(static_cast<std::size_t>(next), 0);
    for (int v = 0; v < n; ++v) c.node_weight[res.projection[v]] += g.node_weight[v];

    // Accumulate parallel edges per coarse row with a scratch accumulator.
    c.row_ptr.assign(static_cast<std::size_t>(next) + 1, 0);
    std::vector<long long> acc(static_cast<std::size_t>(next), 0);
    std::vector<int> touched;
    std::vector<std::vector<int>> members(static_cast<std::size_t>(next));
    for (int v = 0; v < n; ++v) members[res.projection[v]].push_back(v);

    std::vector<int> cols;
    std::vector<long long> weights;
    for (int cu = 0; cu < next; ++cu) {
        touched.clear();
        for (int v : members[cu]) {
            for (int p = g.row_ptr[v]; p < g.row_ptr[v + 1]; ++p) {
                const int cv = res.projection[g.col_idx[p]];
                if (cv == cu) continue;
                if (acc[cv] == 0) touched.push_back(cv);
                acc[cv] += g.edge_weight[p];
            }
        }
        std::sort(touched.begin(), touched.end());
        c.row_ptr[cu + 1] = c.row_ptr[cu] + static_cast<int>(touched.size());
        for (int cv : touched) {
            cols.push_back(cv);
            weights.push_back(acc[cv]);
            acc[cv] = 0;
        }
    }
    c.col_idx = std::move(cols);
    c.edge_weight = std::move(weights);
    return res;
}

CoarsenResult coarsen(const Graph& g, std::uint64_t seed) {
    if (g.num_nodes < 2) throw std::invalid_argument("coarsen: need at least 2 nodes");
    Rng rng(derive_seed(seed, {seed_tag::partition, 0}));
    return coarsen(to_weighted(g), rng, 0);
}

long long edge_cut(const WeightedGraph& g, std::span<const int> assignment) {
    long long cut = 0;
    for (int u = 0; u < g.num_nodes; ++u) {
        for (int p = g.row_ptr[u]; p < g.row_ptr[u + 1]; ++p) {
            const int v = g.col_idx[p];
            if (u < v && assignment[u] != assignment[v]) cut += g.edge_weight[p];
        }
    }
    return cut;
}

long long edge_cut(const Graph& g, std::span<const int> assignment) {
    long long cut = 0;
    for (int u = 0; u < g.num_nodes; ++u) {
        for (int v : g.neighbors(u)) {
            if (u < v && assignment[u] != assignment[v]) cut++;
        }
    }
    return cut;
}

namespace {

struct PartLoads {
    std::vector<long long> weight;
    std::vector<int> count;
};

PartLoads compute_loads(const WeightedGraph& g, const std::vector<int>& assignment, int p) {
    PartLoads loads;
    loads.weight.assign(static_cast<std::size_t>(p), 0);
    loads.count.assign(static_cast<std::size_t>(p), 0);
    for (int v = 0; v < g.num_nodes; ++v) {
        loads.weight[assignment[v]] += g.node_weight[v];
        loads.count[assignment[v]]++;
    }
    return loads;
}

// Greedy graph growing on the coarsest level: grow each part from a random
// seed, always absorbing the frontier node with the strongest connection to
// the part.
std::vector<int> greedy_growing(const WeightedGraph& g, int p, long long cap, Rng& rng) {
    const int n = g.num_nodes;
    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    long long remaining_weight =
        std::accumulate(g.node_weight.begin(), g.node_weight.end(), 0LL);
    int unassigned = n;

    std::vector<long long> conn(static_cast<std::size_t>(n), 0);
    std::vector<int> frontier;

    for (int part = 0; part < p - 1; ++part) {
        const int parts_left = p - part;
        const long long target =
            static_cast<long long>(std::ceil(static_cast<double>(remaining_weight) / parts_left));
        long long grown = 0;
        std::fill(conn.begin(), conn.end(), 0);
        frontier.clear();

        while (grown < target && unassigned > parts_left - 1) {
            int pick = -1;
            if (frontier.empty()) {
                // New component seed: random unassigned node.
                int idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(unassigned)));
                for (int v = 0; v < n; ++v) {
                    if (assignment[v] == -1 && idx-- == 0) {
                        pick = v;
                        break;
                    }
                }
            } else {
                long long best = -1;
                for (int v : frontier) {
                    if (assignment[v] != -1) continue;
                    if (conn[v] > best || (conn[v] == best && (pick == -1 || v < pick))) {
                        best = conn[v];
                        pick = v;
                    }
                }
                if (pick == -1) {
                    frontier.clear();
                    continue;
                }
            }
            if (grown + g.node_weight[pick] > std::min(cap, target + cap / 4) && grown > 0) break;
            assignment[pick] = part;
            grown += g.node_weight[pick];
            remaining_weight -= g.node_weight[pick];
            unassigned--;
            for (int q = g.row_ptr[pick]; q < g.row_ptr[pick + 1]; ++q) {
                const int u = g.col_idx[q];
                if (assignment[u] != -1) continue;
                if (conn[u] == 0) frontier.push_back(u);
                conn[u] += g.edge_weight[q];
            }
        }
    }
    for (int v = 0; v < n; ++v) {
        if (assignment[v] == -1) assignment[v] = p - 1;
    }
    // Guarantee nonempty parts (tiny or adversarial coarse graphs).
    PartLoads loads = compute_loads(g, assignment, p);
    for (int part = 0; part < p; ++part) {
        while (loads.count[part] == 0) {
            int donor = 0;
            for (int t = 1; t < p; ++t) {
                if (loads.count[t] > loads.count[donor]) donor = t;
            }
            for (int v = 0; v < n; ++v) {
                if (assignment[v] == donor) {
                    assignment[v] = part;
                    loads.count[donor]--;
                    loads.count[part]++;
                    loads.weight[donor] -= g.node_weight[v];
                    loads.weight[part] += g.node_weight[v];
                    break;
                }
            }
        }
    }
    return assignment;
}

// Boundary refinement: move a node to the part that minimizes the cut,
// subject to the balance cap; zero-gain moves are taken only when they
// strictly improve the heavier side. Cut never increases.
void refine(const WeightedGraph& g, std::vector<int>& assignment, int p, long long cap, Rng& rng,
            int max_passes = 40) {
    const int n = g.num_nodes;
    PartLoads loads = compute_loads(g, assignment, p);
    std::vector<long long> conn(static_cast<std::size_t>(p), 0);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    for (int pass = 0; pass < max_passes; ++pass) {
        rng.shuffle(order);
        int moved = 0;
        for (int v : order) {
            const int cur = assignment[v];
            if (loads.count[cur] <= 1) continue;
            bool boundary = false;
            std::vector<int> touched;
            for (int q = g.row_ptr[v]; q < g.row_ptr[v + 1]; ++q) {
                const int part = assignment[g.col_idx[q]];
                if (conn[part] == 0) touched.push_back(part);
                conn[part] += g.edge_weight[q];
                if (part != cur) boundary = true;
            }
            if (boundary) {
                int best = cur;
                long long best_conn = conn[cur];
                for (int part : touched) {
                    if (part == cur) continue;
                    if (loads.weight[part] + g.node_weight[v] > cap) continue;
                    const long long gain = conn[part] - conn[cur];
                    if (gain > 0) {
                        if (best == cur || conn[part] > best_conn ||
                            (conn[part] == best_conn && part < best)) {
                            best = part;
                            best_conn = conn[part];
                        }
                    } else if (gain == 0 && best == cur &&
                               loads.weight[cur] > loads.weight[part] + g.node_weight[v]) {
                        best = part;
                        best_conn = conn[part];
                    }
                }
                if (best != cur) {
                    assignment[v] = best;
                    loads.weight[cur] -= g.node_weight[v];
                    loads.weight[best] += g.node_weight[v];
                    loads.count[cur]--;
                    loads.count[best]++;
                    moved++;
                }
            }
            for (int part : touched) conn[part] = 0;
        }
        if (moved == 0) break;
    }
}

// Best-effort at coarse levels; at the finest level (unit weights) this
// always restores the cap.
void repair_balance(const WeightedGraph& g, std::vector<int>& assignment, int p, long long cap) {
    PartLoads loads = compute_loads(g, assignment, p);
    for (int guard = 0; guard < 4 * g.num_nodes; ++guard) {
        int over = -1;
        for (int part = 0; part < p; ++part) {
            if (loads.weight[part] > cap && (over == -1 || loads.weight[part] > loads.weight[over]))
                over = part;
        }
        if (over == -1) return;
        int under = -1;
        for (int part = 0; part < p; ++part) {
            if (part != over && (under == -1 || loads.weight[part] < loads.weight[under]))
                under = part;
        }
        // Move the node whose transfer damages the cut least.
        int pick = -1;
        long long pick_score = 0;
        for (int v = 0; v < g.num_nodes; ++v) {
            if (assignment[v] != over) continue;
            if (loads.weight[under] + g.node_weight[v] > cap) continue;
            long long score = 0;
            for (int q = g.row_ptr[v]; q < g.row_ptr[v + 1]; ++q) {
                const int part = assignment[g.col_idx[q]];
                if (part == under) score += g.edge_weight[q];
                if (part == over) score -= g.edge_weight[q];
            }
            if (pick == -1 || score > pick_score) {
                pick = v;
                pick_score = score;
            }
        }
        if (pick == -1) return;
        assignment[pick] = under;
        loads.weight[over] -= g.node_weight[pick];
        loads.weight[under] += g.node_weight[pick];
        loads.count[over]--;
        loads.count[under]++;
    }
}

}  // namespace

Partition partition_multilevel(const Graph& g, int num_parts, std::uint64_t seed,
                               double balance_eps) {
    if (num_parts < 1) throw std::invalid_argument("partition: num_parts must be >= 1");
    if (num_parts > g.num_nodes)
        throw std::invalid_argument("partition: num_parts exceeds node count");

    Partition out;
    out.num_parts = num_parts;
    if (num_parts == 1) {
        out.assignment.assign(static_cast<std::size_t>(g.num_nodes), 0);
        return out;
    }

    const long long cap = balance_cap(g.num_nodes, num_parts, balance_eps);
    const long long cap_node_w = std::max<long long>(2, cap / 4);
    const int coarse_target = std::max(30 * num_parts, 200);

    std::vector<WeightedGraph> levels;
    std::vector<std::vector<int>> projections;
    levels.push_back(to_weighted(g));
    Rng rng(derive_seed(seed, {seed_tag::partition, static_cast<std::uint64_t>(num_parts)}));

    while (levels.back().num_nodes > coarse_target) {
        CoarsenResult res = coarsen(levels.back(), rng, cap_node_w);
        if (res.fixed_point || res.coarse.num_nodes >= levels.back().num_nodes) break;
        const bool stalled = res.coarse.num_nodes > 0.98 * levels.back().num_nodes;
        projections.push_back(std::move(res.projection));
        levels.push_back(std::move(res.coarse));
        if (stalled) break;
    }

    // Several growing attempts at the coarsest level, keeping the best cut.
    std::vector<int> assignment;
    long long best_cut = -1;
    for (int attempt = 0; attempt < 8; ++attempt) {
        std::vector<int> trial = greedy_growing(levels.back(), num_parts, cap, rng);
        repair_balance(levels.back(), trial, num_parts, cap);
        refine(levels.back(), trial, num_parts, cap, rng);
        const long long cut = edge_cut(levels.back(), trial);
        if (best_cut < 0 || cut < best_cut) {
            best_cut = cut;
            assignment = std::move(trial);
        }
    }

    for (int level = static_cast<int>(levels.size()) - 2; level >= 0; --level) {
        std::vector<int> fine(static_cast<std::size_t>(levels[level].num_nodes));
        for (int v = 0; v < levels[level].num_nodes; ++v)
            fine[v] = assignment[projections[level][v]];
        assignment = std::move(fine);
        repair_balance(levels[level], assignment, num_parts, cap);
        refine(levels[level], assignment, num_parts, cap, rng);
    }

    out.assignment = std::move(assignment);
    return out;
}

void refine_assignment(const Graph& g, std::vector<int>& assignment, int num_parts,
                       std::uint64_t seed, double balance_eps) {
    if (static_cast<int>(assignment.size()) != g.num_nodes)
        throw std::invalid_argument("refine_assignment: assignment size mismatch");
    const WeightedGraph w = to_weighted(g);
    const long long cap = balance_cap(g.num_nodes, num_parts, balance_eps);
    Rng rng(derive_seed(seed, {seed_tag::partition, 0xFE}));
    refine(w, assignment, num_parts, cap, rng);
}

std::vector<ClientDataset> build_disjoint(const Graph& g, int num_parts, std::uint64_t seed,
                                          const SplitRatios& ratios) {
    const Partition part = partition_multilevel(g, num_parts, seed);
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(num_parts));
    for (int v = 0; v < g.num_nodes; ++v) groups[part.assignment[v]].push_back(v);

    std::vector<ClientDataset> clients;
    clients.reserve(static_cast<std::size_t>(num_parts));
    for (int k = 0; k < num_parts; ++k) {
        ClientDataset c = induced_subgraph(g, groups[static_cast<std::size_t>(k)]);
        c.splits = make_splits(c.graph, ratios.train, ratios.val, ratios.test,
                               derive_seed(seed, {seed_tag::splits, static_cast<std::uint64_t>(k)}));
        clients.push_back(std::move(c));
    }
    return clients;
}

std::vector<ClientDataset> build_overlapping(const Graph& g, int num_parts, int samples_per_part,
                                             double fraction, std::uint64_t seed,
                                             const SplitRatios& ratios) {
    if (samples_per_part < 1)
        throw std::invalid_argument("build_overlapping: samples_per_part must be >= 1");
    if (fraction <= 0.0 || fraction > 1.0)
        throw std::invalid_argument("build_overlapping: fraction must be in (0, 1]");

    const Partition part = partition_multilevel(g, num_parts, seed);
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(num_parts));
    for (int v = 0; v < g.num_nodes; ++v) groups[part.assignment[v]].push_back(v);

    std::vector<ClientDataset> clients;
    clients.reserve(static_cast<std::size_t>(num_parts) * samples_per_part);
    for (int k = 0; k < num_parts; ++k) {
        const auto& pool = groups[static_cast<std::size_t>(k)];
        if (pool.size() < 2)
            throw std::invalid_argument("build_overlapping: part smaller than 2 nodes");
        const auto m = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<double>(pool.size()) - 1e-12));
        for (int s = 0; s < samples_per_part; ++s) {
            std::vector<int> sample = pool;
            Rng rng(derive_seed(seed, {seed_tag::overlap_sample, static_cast<std::uint64_t>(k),
                                       static_cast<std::uint64_t>(s)}));
            rng.shuffle(sample);
            sample.resize(std::max<std::size_t>(m, 1));
            const int client_index = k * samples_per_part + s;
            ClientDataset c = induced_subgraph(g, sample);
            c.splits = make_splits(
                c.graph, ratios.train, ratios.val, ratios.test,
                derive_seed(seed, {seed_tag::splits, static_cast<std::uint64_t>(client_index)}));
            clients.push_back(std::move(c));
        }
    }
    return clients;
}

std::vector<ClientDataset> build_scenario(const Graph& g, const ScenarioSpec& spec,
                                          const SplitRatios& ratios) {
    if (spec.kind == ScenarioKind::disjoint) {
        return build_disjoint(g, spec.num_parts, spec.seed, ratios);
    }
    return build_overlapping(g, spec.num_parts, spec.samples_per_part, spec.sample_fraction,
                             spec.seed, ratios);
}

long long count_missing_links(const Graph& g, std::span<const ClientDataset> clients) {
    std::unordered_set<long long> present;
    for (const auto& c : clients) {
        for (int lu = 0; lu < c.graph.num_nodes; ++lu) {
            const int gu = c.global_ids[static_cast<std::size_t>(lu)];
            for (int lv : c.graph.neighbors(lu)) {
                const int gv = c.global_ids[static_cast<std::size_t>(lv)];
                if (gu < gv)
                    present.insert(static_cast<long long>(gu) * g.num_nodes + gv);
            }
        }
    }
    return g.num_edges() - static_cast<long long>(present.size());
}

double js_divergence_base2(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw std::invalid_argument("js_divergence: distributions differ in support size");
    const double inv_ln2 = 1.4426950408889634;
    double js = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) js += 0.5 * p[i] * std::log(p[i] / m) * inv_ln2;
        if (q[i] > 0.0) js += 0.5 * q[i] * std::log(q[i] / m) * inv_ln2;
    }
    return std::clamp(js, 0.0, 1.0);
}

double hellinger_distance(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw std::invalid_argument("hellinger: distributions differ in support size");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
        s += d * d;
    }
    return std::clamp(std::sqrt(0.5 * s), 0.0, 1.0);
}

namespace {

std::vector<std::vector<double>> label_distributions(std::span<const ClientDataset> clients) {
    int num_classes = 0;
    for (const auto& c : clients) num_classes = std::max(num_classes, c.graph.num_classes);
    std::vector<std::vector<double>> dists;
    dists.reserve(clients.size());
    for (const auto& c : clients) {
        std::vector<double> h(static_cast<std::size_t>(num_classes), 0.0);
        for (int y : c.graph.labels) h[static_cast<std::size_t>(y)] += 1.0;
        for (double& x : h) x /= static_cast<double>(c.graph.num_nodes);
        dists.push_back(std::move(h));
    }
    return dists;
}

std::vector<std::vector<double>> degree_distributions(std::span<const ClientDataset> clients) {
    int max_deg = 0;
    for (const auto& c : clients) {
        for (int v = 0; v < c.graph.num_nodes; ++v) max_deg = std::max(max_deg, c.graph.degree(v));
    }
    std::vector<std::vector<double>> dists;
    dists.reserve(clients.size());
    for (const auto& c : clients) {
        std::vector<double> h(static_cast<std::size_t>(max_deg) + 1, 0.0);
        for (int v = 0; v < c.graph.num_nodes; ++v) h[static_cast<std::size_t>(c.graph.degree(v))] += 1.0;
        for (double& x : h) x /= static_cast<double>(c.graph.num_nodes);
        dists.push_back(std::move(h));
    }
    return dists;
}

}  // namespace

double label_heterogeneity(std::span<const ClientDataset> clients) {
    if (clients.size() < 2) throw std::invalid_argument("label_heterogeneity: need >= 2 clients");
    const auto dists = label_distributions(clients);
    std::vector<double> pairs;
    for (std::size_t i = 0; i < dists.size(); ++i) {
        for (std::size_t j = i + 1; j < dists.size(); ++j)
            pairs.push_back(js_divergence_base2(dists[i], dists[j]));
    }
    std::sort(pairs.begin(), pairs.end());
    const std::size_t m = pairs.size();
    return (m % 2 == 1) ? pairs[m / 2] : 0.5 * (pairs[m / 2 - 1] + pairs[m / 2]);
}

double degree_heterogeneity(std::span<const ClientDataset> clients) {
    if (clients.size() < 2) throw std::invalid_argument("degree_heterogeneity: need >= 2 clients");
    const auto dists = degree_distributions(clients);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < dists.size(); ++i) {
        for (std::size_t j = i + 1; j < dists.size(); ++j) {
            sum += hellinger_distance(dists[i], dists[j]);
            count++;
        }
    }
    return sum / static_cast<double>(count);
}

}  // namespace fedgrains
