#include "fedgrains/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace fedgrains {

SynthConfig synth_preset(const std::string& name) {
    SynthConfig cfg;
    if (name == "cora") {
        cfg.num_nodes = 2485;
        cfg.num_classes = 7;
        cfg.feature_dim = 500;
        cfg.num_leaves = 20;
        cfg.total_edges = 10138;
        cfg.pair_edges = 24;
        cfg.quad_cross_edges = 10;
        cfg.far_edges = 400;
    } else if (name == "citeseer") {
        cfg.num_nodes = 2120;
        cfg.num_classes = 6;
        cfg.feature_dim = 500;
        cfg.num_leaves = 20;
        cfg.total_edges = 7358;
        cfg.pair_edges = 12;
        cfg.quad_cross_edges = 10;
        cfg.far_edges = 105;
    } else if (name == "tiny") {
        // defaults
    } else {
        throw std::invalid_argument("unknown synth preset: " + name);
    }
    return cfg;
}

namespace {

struct EdgeSet {
    int n;
    std::unordered_set<long long> seen;
    std::vector<std::pair<int, int>> edges;

    bool add(int u, int v) {
        if (u == v) return false;
        if (u > v) std::swap(u, v);
        const long long key = static_cast<long long>(u) * n + v;
        if (!seen.insert(key).second) return false;
        edges.emplace_back(u, v);
        return true;
    }
};

int pick(Rng& rng, int lo, int hi) {  // uniform in [lo, hi)
    return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo)));
}

}  // namespace

Graph make_synth(const SynthConfig& cfg, std::uint64_t seed) {
    if (cfg.num_leaves % 4 != 0)
        throw std::invalid_argument("make_synth: num_leaves must be a multiple of 4");
    if (cfg.num_nodes < cfg.num_leaves * 3)
        throw std::invalid_argument("make_synth: too few nodes per leaf");

    const int n = cfg.num_nodes;
    const int nl = cfg.num_leaves;
    Rng rng(derive_seed(seed, {seed_tag::synth}));

    // Contiguous leaf ranges; remainder nodes go to the first leaves.
    std::vector<int> leaf_begin(static_cast<std::size_t>(nl) + 1, 0);
    {
        const int base = n / nl;
        int rem = n % nl;
        for (int l = 0; l < nl; ++l)
            leaf_begin[l + 1] = leaf_begin[l] + base + (rem-- > 0 ? 1 : 0);
    }

    const int num_pairs = nl / 2;
    const int num_quads = nl / 4;
    const long long pair_total = cfg.pair_edges * num_pairs;
    const long long quad_total = cfg.quad_cross_edges * 4 * num_quads;
    const long long intra_total = cfg.total_edges - pair_total - quad_total - cfg.far_edges;
    if (intra_total < nl)
        throw std::invalid_argument("make_synth: edge budget too small for intra-leaf edges");

    // Intra-leaf budgets with a density gradient across the leaves of each
    // quad; largest-remainder rounding keeps the total exact.
    std::vector<double> weight(static_cast<std::size_t>(nl));
    double wsum = 0.0;
    for (int l = 0; l < nl; ++l) {
        weight[l] = 1.0 + cfg.density_spread * ((l % 4) - 1.5);
        wsum += weight[l];
    }
    std::vector<long long> intra(static_cast<std::size_t>(nl));
    std::vector<double> rem(static_cast<std::size_t>(nl));
    long long assigned = 0;
    for (int l = 0; l < nl; ++l) {
        const double exact = intra_total * weight[l] / wsum;
        intra[l] = static_cast<long long>(std::floor(exact));
        rem[l] = exact - static_cast<double>(intra[l]);
        assigned += intra[l];
    }
    std::vector<int> order(static_cast<std::size_t>(nl));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (rem[a] != rem[b]) return rem[a] > rem[b];
        return a < b;
    });
    for (int i = 0; assigned < intra_total; ++i, ++assigned) intra[order[i % nl]]++;

    EdgeSet es;
    es.n = n;
    es.edges.reserve(static_cast<std::size_t>(cfg.total_edges));

    auto add_between = [&](int lo_a, int hi_a, int lo_b, int hi_b, long long count) {
        for (long long e = 0; e < count; ++e) {
            bool ok = false;
            for (int attempt = 0; attempt < 500 && !ok; ++attempt) {
                ok = es.add(pick(rng, lo_a, hi_a), pick(rng, lo_b, hi_b));
            }
            if (!ok) throw std::runtime_error("make_synth: edge budget exceeds pair capacity");
        }
    };

    // Intra-leaf: a ring backbone, then a mix of random chords and
    // triangle-closing edges.
    for (int l = 0; l < nl; ++l) {
        const int lo = leaf_begin[l], hi = leaf_begin[l + 1];
        const int sz = hi - lo;
        long long budget = intra[l];
        for (int v = lo; v < hi && budget > 0; ++v) {
            if (es.add(v, lo + (v - lo + 1) % sz)) budget--;
        }
        std::vector<std::vector<int>> nb(static_cast<std::size_t>(sz));
        for (int v = 0; v < sz; ++v) {
            nb[v] = {(v + 1) % sz, (v + sz - 1) % sz};
        }
        while (budget > 0) {
            bool ok = false;
            if (rng.uniform01() < cfg.triangle_fraction) {
                // Close a wedge around a random node.
                const int w = pick(rng, 0, sz);
                if (nb[w].size() >= 2) {
                    const int i = pick(rng, 0, static_cast<int>(nb[w].size()));
                    const int j = pick(rng, 0, static_cast<int>(nb[w].size()));
                    if (i != j) ok = es.add(lo + nb[w][i], lo + nb[w][j]);
                    if (ok) {
                        nb[nb[w][i]].push_back(nb[w][j]);
                        nb[nb[w][j]].push_back(nb[w][i]);
                    }
                }
            }
            if (!ok) {
                const int u = pick(rng, 0, sz);
                const int v = pick(rng, 0, sz);
                ok = es.add(lo + u, lo + v);
                if (ok) {
                    nb[u].push_back(v);
                    nb[v].push_back(u);
                }
            }
            if (ok) budget--;
        }
    }

    // Partner-pair edges.
    for (int p = 0; p < num_pairs; ++p) {
        const int a = 2 * p, b = 2 * p + 1;
        add_between(leaf_begin[a], leaf_begin[a + 1], leaf_begin[b], leaf_begin[b + 1],
                    cfg.pair_edges);
    }
    // Cross-pair edges inside each quad.
    for (int q = 0; q < num_quads; ++q) {
        const int base = 4 * q;
        const int combos[4][2] = {{0, 2}, {0, 3}, {1, 2}, {1, 3}};
        for (const auto& c : combos) {
            const int a = base + c[0], b = base + c[1];
            add_between(leaf_begin[a], leaf_begin[a + 1], leaf_begin[b], leaf_begin[b + 1],
                        cfg.quad_cross_edges);
        }
    }
    // Far edges between distinct quads.
    for (long long e = 0; e < cfg.far_edges; ++e) {
        bool ok = false;
        for (int attempt = 0; attempt < 500 && !ok; ++attempt) {
            const int qa = pick(rng, 0, num_quads);
            int qb = pick(rng, 0, num_quads);
            if (qa == qb) continue;
            const int la = 4 * qa + pick(rng, 0, 4);
            const int lb = 4 * qb + pick(rng, 0, 4);
            ok = es.add(pick(rng, leaf_begin[la], leaf_begin[la + 1]),
                        pick(rng, leaf_begin[lb], leaf_begin[lb + 1]));
        }
        if (!ok) throw std::runtime_error("make_synth: could not place far edge");
    }

    // Labels: leaf class with mixing; a small fraction is mislabeled outright.
    std::vector<int> featured(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int l = 0; l < nl; ++l) {
        for (int v = leaf_begin[l]; v < leaf_begin[l + 1]; ++v) {
            int cls = l % cfg.num_classes;
            if (rng.uniform01() < cfg.label_mix) {
                cls = (cls + 1 + pick(rng, 0, cfg.num_classes - 1)) % cfg.num_classes;
            }
            featured[v] = cls;
            labels[v] = cls;
            if (rng.uniform01() < cfg.label_flip) {
                labels[v] = (cls + 1 + pick(rng, 0, cfg.num_classes - 1)) % cfg.num_classes;
            }
        }
    }

    // Features: class centroid + leaf offset + noise.
    const int d = cfg.feature_dim;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    DenseMatrix centroids(cfg.num_classes, d);
    for (double& x : centroids.data) x = rng.normal() * inv_sqrt_d;
    DenseMatrix offsets(nl, d);
    for (double& x : offsets.data) x = rng.normal() * inv_sqrt_d;

    DenseMatrix features(n, d);
    for (int l = 0; l < nl; ++l) {
        for (int v = leaf_begin[l]; v < leaf_begin[l + 1]; ++v) {
            double* row = features.row(v);
            const double* mu = centroids.row(featured[v]);
            const double* nu = offsets.row(l);
            // Noise is per-entry (unscaled): individual features are mostly
            // noise and class signal only emerges pooled across dimensions,
            // as in bag-of-words citation data.
            for (int j = 0; j < d; ++j) {
                row[j] = cfg.class_scale * mu[j] + cfg.leaf_scale * nu[j] +
                         cfg.feature_noise * rng.normal();
            }
        }
    }

    return build_graph(n, es.edges, std::move(features), std::move(labels), cfg.num_classes);
}

}  // namespace fedgrains
