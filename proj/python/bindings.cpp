#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fedgrains/config.hpp"
#include "fedgrains/dataset_io.hpp"
#include "fedgrains/fedsim.hpp"
#include "fedgrains/gflownet.hpp"
#include "fedgrains/partition.hpp"
#include "fedgrains/synth.hpp"

namespace py = pybind11;
using namespace fedgrains;

namespace {

Graph graph_from_numpy(py::array_t<double, py::array::c_style | py::array::forcecast> features,
                       py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> edges,
                       py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> labels,
                       int num_classes) {
    if (features.ndim() != 2) throw std::invalid_argument("features must be 2-d");
    if (edges.ndim() != 2 || (edges.shape(0) > 0 && edges.shape(1) != 2))
        throw std::invalid_argument("edges must be (E, 2)");
    if (labels.ndim() != 1) throw std::invalid_argument("labels must be 1-d");

    const int n = static_cast<int>(features.shape(0));
    const int d = static_cast<int>(features.shape(1));
    DenseMatrix x(n, d);
    std::memcpy(x.data.data(), features.data(), sizeof(double) * x.data.size());

    std::vector<std::pair<int, int>> edge_list;
    edge_list.reserve(static_cast<std::size_t>(edges.shape(0)));
    for (py::ssize_t i = 0; i < edges.shape(0); ++i) {
        edge_list.emplace_back(static_cast<int>(edges.at(i, 0)), static_cast<int>(edges.at(i, 1)));
    }
    std::vector<int> y(static_cast<std::size_t>(labels.shape(0)));
    for (py::ssize_t i = 0; i < labels.shape(0); ++i) y[i] = static_cast<int>(labels.at(i));

    return build_graph(n, edge_list, std::move(x), std::move(y), num_classes);
}

py::array_t<double> features_array(const Graph& g) {
    py::array_t<double> out({g.num_nodes, g.num_features()});
    std::memcpy(out.mutable_data(), g.features.data.data(),
                sizeof(double) * g.features.data.size());
    return out;
}

py::array_t<std::int64_t> edges_array(const Graph& g) {
    const auto e = static_cast<py::ssize_t>(g.num_edges());
    py::array_t<std::int64_t> out({e, static_cast<py::ssize_t>(2)});
    auto view = out.mutable_unchecked<2>();
    py::ssize_t row = 0;
    for (int u = 0; u < g.num_nodes; ++u) {
        for (int v : g.neighbors(u)) {
            if (u < v) {
                view(row, 0) = u;
                view(row, 1) = v;
                row++;
            }
        }
    }
    return out;
}

TrainConfig train_config_from_kwargs(const py::dict& kw) {
    ExperimentConfig cfg;
    cfg.scenario = "-";
    cfg.out = "-";
    for (const auto& item : kw) {
        const std::string key = py::cast<std::string>(item.first);
        if (key == "strategy") cfg.strategy = py::cast<std::string>(item.second);
        else if (key == "fedgrains") cfg.fedgrains = py::cast<bool>(item.second);
        else if (key == "rounds") cfg.rounds = py::cast<int>(item.second);
        else if (key == "local_epochs") cfg.local_epochs = py::cast<int>(item.second);
        else if (key == "batch_size") cfg.batch_size = py::cast<int>(item.second);
        else if (key == "k") cfg.k = py::cast<int>(item.second);
        else if (key == "k_scope") cfg.k_scope = py::cast<std::string>(item.second);
        else if (key == "alpha") cfg.alpha = py::cast<double>(item.second);
        else if (key == "log_z") cfg.log_z = py::cast<double>(item.second);
        else if (key == "lr") cfg.lr = py::cast<double>(item.second);
        else if (key == "gfn_lr") cfg.gfn_lr = py::cast<double>(item.second);
        else if (key == "hidden") cfg.hidden = py::cast<int>(item.second);
        else if (key == "gfn_conditioning") cfg.gfn_conditioning = py::cast<std::string>(item.second);
        else if (key == "sampled_eval") cfg.sampled_eval = py::cast<bool>(item.second);
        else if (key == "couple_tb_to_gnn") cfg.couple_tb_to_gnn = py::cast<bool>(item.second);
        else if (key == "threads") cfg.threads = py::cast<int>(item.second);
        else if (key == "seed") cfg.seeds = {py::cast<std::uint64_t>(item.second)};
        else throw std::invalid_argument("unknown train option: " + key);
    }
    validate_train_config(cfg);
    return to_train_config(cfg, cfg.seeds.front());
}

py::dict round_to_dict(const RoundMetrics& m) {
    py::dict d;
    d["round"] = m.round;
    d["mean_train_loss"] = m.mean_train_loss;
    d["mean_val_acc"] = m.mean_val_acc;
    d["std_val_acc"] = m.std_val_acc;
    d["mean_test_acc"] = m.mean_test_acc;
    d["std_test_acc"] = m.std_test_acc;
    d["mean_tb_residual"] = m.mean_tb_residual;
    py::list rows;
    for (const auto& c : m.clients) {
        py::dict r;
        r["client"] = c.client;
        r["train_loss"] = c.train_loss;
        r["train_acc"] = c.train_acc;
        r["val_acc"] = c.val_acc;
        r["test_acc"] = c.test_acc;
        r["tb_residual"] = c.tb_residual;
        r["n_train"] = c.n_train;
        rows.append(r);
    }
    d["clients"] = rows;
    return d;
}

}  // namespace

PYBIND11_MODULE(_fedgrains, m) {
    m.doc() = "Personalized subgraph federated learning simulator (C++ core)";

    py::class_<Graph>(m, "Graph")
        .def_property_readonly("num_nodes", [](const Graph& g) { return g.num_nodes; })
        .def_property_readonly("num_edges", [](const Graph& g) { return g.num_edges(); })
        .def_property_readonly("num_classes", [](const Graph& g) { return g.num_classes; })
        .def_property_readonly("num_features", [](const Graph& g) { return g.num_features(); })
        .def_property_readonly("labels", [](const Graph& g) { return g.labels; })
        .def_property_readonly("features", &features_array)
        .def_property_readonly("edges", &edges_array)
        .def("degree", [](const Graph& g, int v) { return g.degree(v); })
        .def("__repr__", [](const Graph& g) {
            std::ostringstream ss;
            ss << "Graph(nodes=" << g.num_nodes << ", edges=" << g.num_edges()
               << ", classes=" << g.num_classes << ")";
            return ss.str();
        });

    py::class_<SplitMask>(m, "SplitMask")
        .def_property_readonly("train", [](const SplitMask& s) { return s.train; })
        .def_property_readonly("val", [](const SplitMask& s) { return s.val; })
        .def_property_readonly("test", [](const SplitMask& s) { return s.test; });

    py::class_<ClientDataset>(m, "ClientDataset")
        .def_property_readonly("graph", [](const ClientDataset& c) { return c.graph; })
        .def_property_readonly("global_ids", [](const ClientDataset& c) { return c.global_ids; })
        .def_property_readonly("splits", [](const ClientDataset& c) { return c.splits; });

    m.def("graph", &graph_from_numpy, py::arg("features"), py::arg("edges"), py::arg("labels"),
          py::arg("num_classes"),
          "Build a validated graph from numpy arrays (edges are symmetrized).");
    m.def("load_dataset", [](const std::string& dir) { return load_dataset(dir); });
    m.def("save_dataset",
          [](const Graph& g, const std::string& dir) { return save_dataset(g, dir); });
    m.def("make_synth",
          [](const std::string& preset, std::uint64_t seed) {
              return make_synth(synth_preset(preset), seed);
          },
          py::arg("preset") = "tiny", py::arg("seed") = 1);

    m.def("make_splits",
          [](const Graph& g, double train, double val, double test, std::uint64_t seed) {
              return make_splits(g, train, val, test, seed);
          },
          py::arg("graph"), py::arg("train") = 0.2, py::arg("val") = 0.4, py::arg("test") = 0.4,
          py::arg("seed") = 0);
    m.def("induced_subgraph", [](const Graph& g, const std::vector<int>& nodes) {
        return induced_subgraph(g, nodes);
    });
    m.def("clustering_coefficient", &clustering_coefficient);

    m.def("partition",
          [](const Graph& g, int parts, std::uint64_t seed, double eps) {
              return partition_multilevel(g, parts, seed, eps).assignment;
          },
          py::arg("graph"), py::arg("parts"), py::arg("seed") = 0, py::arg("eps") = 0.05,
          "Multilevel edge-cut partition; returns the node->part assignment.");
    m.def("edge_cut", [](const Graph& g, const std::vector<int>& assignment) {
        return edge_cut(g, assignment);
    });
    m.def("build_disjoint",
          [](const Graph& g, int parts, std::uint64_t seed, double train, double val,
             double test) {
              return build_disjoint(g, parts, seed, SplitRatios{train, val, test});
          },
          py::arg("graph"), py::arg("parts"), py::arg("seed") = 0, py::arg("train") = 0.2,
          py::arg("val") = 0.4, py::arg("test") = 0.4);
    m.def("build_overlapping",
          [](const Graph& g, int parts, int samples, double fraction, std::uint64_t seed,
             double train, double val, double test) {
              return build_overlapping(g, parts, samples, fraction, seed,
                                       SplitRatios{train, val, test});
          },
          py::arg("graph"), py::arg("parts"), py::arg("samples_per_part") = 5,
          py::arg("fraction") = 0.5, py::arg("seed") = 0, py::arg("train") = 0.2,
          py::arg("val") = 0.4, py::arg("test") = 0.4);
    m.def("count_missing_links", [](const Graph& g, const std::vector<ClientDataset>& clients) {
        return count_missing_links(g, clients);
    });
    m.def("label_heterogeneity", [](const std::vector<ClientDataset>& clients) {
        return label_heterogeneity(clients);
    });
    m.def("degree_heterogeneity", [](const std::vector<ClientDataset>& clients) {
        return degree_heterogeneity(clients);
    });

    m.def(
        "train",
        [](const std::vector<ClientDataset>& clients, const py::kwargs& kwargs) {
            const TrainConfig cfg = train_config_from_kwargs(kwargs);
            std::vector<ClientState> states = init_clients(clients, cfg);
            RunResult result;
            {
                py::gil_scoped_release release;
                result = run_server(states, cfg, nullptr);
            }
            py::list rounds;
            for (const auto& r : result.rounds) rounds.append(round_to_dict(r));
            return rounds;
        },
        py::arg("clients"),
        "Run the federated loop; returns per-round metrics dictionaries.\n"
        "Options: strategy, fedgrains, rounds, local_epochs, batch_size, k, k_scope,\n"
        "alpha, log_z, lr, gfn_lr, hidden, gfn_conditioning, sampled_eval,\n"
        "couple_tb_to_gnn, threads, seed.");
}
