#include "fedgrains/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "dataset files are little-endian; big-endian hosts are unsupported");

namespace fedgrains {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<char> read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("missing file: " + p.string());
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    in.seekg(0);
    std::vector<char> buf(static_cast<std::size_t>(size));
    in.read(buf.data(), size);
    if (!in) throw DataError("short read: " + p.string());
    return buf;
}

void write_file(const fs::path& p, const void* data, std::size_t bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for write: " + p.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out) throw DataError("short write: " + p.string());
}

json read_json(const fs::path& p) {
    auto buf = read_file(p);
    json j = json::parse(buf.begin(), buf.end(), nullptr, false);
    if (j.is_discarded()) throw DataError("malformed json: " + p.string());
    return j;
}

}  // namespace

Graph load_dataset(const fs::path& dir) {
    const json meta = read_json(dir / "meta.json");
    if (!meta.contains("num_nodes") || !meta.contains("num_features") ||
        !meta.contains("num_classes")) {
        throw DataError("meta.json must declare num_nodes/num_features/num_classes");
    }
    const int n = meta["num_nodes"].get<int>();
    const int d = meta["num_features"].get<int>();
    const int c = meta["num_classes"].get<int>();
    if (n < 0 || d < 0 || c <= 0) throw DataError("meta.json: invalid counts");

    // Contractual storage is features.f64; a half-size features.f32 file is
    // accepted as well and widened on load (compute stays 64-bit).
    DenseMatrix features(n, d);
    if (fs::exists(dir / "features.f64")) {
        const auto fbuf = read_file(dir / "features.f64");
        if (fbuf.size() != static_cast<std::size_t>(n) * d * sizeof(double))
            throw DataError("features.f64: size does not match num_nodes x num_features");
        std::memcpy(features.data.data(), fbuf.data(), fbuf.size());
    } else if (fs::exists(dir / "features.f32")) {
        const auto fbuf = read_file(dir / "features.f32");
        if (fbuf.size() != static_cast<std::size_t>(n) * d * sizeof(float))
            throw DataError("features.f32: size does not match num_nodes x num_features");
        for (std::size_t i = 0; i < features.data.size(); ++i) {
            float v;
            std::memcpy(&v, fbuf.data() + i * sizeof(float), sizeof(float));
            features.data[i] = static_cast<double>(v);
        }
    } else {
        throw DataError("missing file: " + (dir / "features.f64").string());
    }

    const auto lbuf = read_file(dir / "labels.u32");
    if (lbuf.size() != static_cast<std::size_t>(n) * sizeof(std::uint32_t))
        throw DataError("labels.u32: size does not match num_nodes");
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::uint32_t y;
        std::memcpy(&y, lbuf.data() + static_cast<std::size_t>(i) * 4, 4);
        if (y >= static_cast<std::uint32_t>(c))
            throw DataError("labels.u32: label >= num_classes");
        labels[static_cast<std::size_t>(i)] = static_cast<int>(y);
    }

    const auto ebuf = read_file(dir / "edges.u32");
    if (ebuf.size() % (2 * sizeof(std::uint32_t)) != 0)
        throw DataError("edges.u32: size is not a multiple of 8");
    const std::size_t num_pairs = ebuf.size() / 8;
    std::vector<std::pair<int, int>> edges(num_pairs);
    for (std::size_t i = 0; i < num_pairs; ++i) {
        std::uint32_t uv[2];
        std::memcpy(uv, ebuf.data() + i * 8, 8);
        if (uv[0] >= static_cast<std::uint32_t>(n) || uv[1] >= static_cast<std::uint32_t>(n))
            throw DataError("edges.u32: endpoint out of range");
        edges[i] = {static_cast<int>(uv[0]), static_cast<int>(uv[1])};
    }

    try {
        return build_graph(n, edges, std::move(features), std::move(labels), c);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
}

void save_dataset(const Graph& g, const fs::path& dir) {
    fs::create_directories(dir);
    json meta;
    meta["num_nodes"] = g.num_nodes;
    meta["num_features"] = g.num_features();
    meta["num_classes"] = g.num_classes;
    const std::string mtxt = meta.dump(2) + "\n";
    write_file(dir / "meta.json", mtxt.data(), mtxt.size());

    write_file(dir / "features.f64", g.features.data.data(),
               g.features.data.size() * sizeof(double));

    std::vector<std::uint32_t> labels(g.labels.begin(), g.labels.end());
    write_file(dir / "labels.u32", labels.data(), labels.size() * sizeof(std::uint32_t));

    // Each undirected edge once, canonical (u < v), sorted.
    std::vector<std::uint32_t> pairs;
    pairs.reserve(static_cast<std::size_t>(g.num_edges()) * 2);
    for (int u = 0; u < g.num_nodes; ++u) {
        for (int v : g.neighbors(u)) {
            if (u < v) {
                pairs.push_back(static_cast<std::uint32_t>(u));
                pairs.push_back(static_cast<std::uint32_t>(v));
            }
        }
    }
    write_file(dir / "edges.u32", pairs.data(), pairs.size() * sizeof(std::uint32_t));
}

Graph ingest_planetoid(const fs::path& content_file, const fs::path& cites_file) {
    std::ifstream content(content_file);
    if (!content) throw DataError("missing file: " + content_file.string());

    std::vector<std::string> node_ids;
    std::map<std::string, int> id_index;
    std::vector<std::vector<double>> feats;
    std::vector<std::string> label_names;
    std::string line;
    int d = -1;
    while (std::getline(content, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::vector<std::string> tok;
        std::string t;
        while (ss >> t) tok.push_back(t);
        if (tok.size() < 2) throw DataError("malformed .content line: " + line);
        const int row_d = static_cast<int>(tok.size()) - 2;
        if (d == -1) d = row_d;
        if (row_d != d) throw DataError(".content rows disagree on feature count");
        if (id_index.count(tok.front()))
            throw DataError("duplicate node id in .content: " + tok.front());
        id_index[tok.front()] = static_cast<int>(node_ids.size());
        node_ids.push_back(tok.front());
        std::vector<double> f(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) {
            try {
                f[static_cast<std::size_t>(j)] = std::stod(tok[static_cast<std::size_t>(j) + 1]);
            } catch (...) {
                throw DataError("non-numeric feature in .content: " + tok[j + 1]);
            }
        }
        feats.push_back(std::move(f));
        label_names.push_back(tok.back());
    }
    const int n = static_cast<int>(node_ids.size());
    if (n == 0) throw DataError(".content is empty");

    std::vector<std::string> classes = label_names;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    std::map<std::string, int> class_index;
    for (std::size_t i = 0; i < classes.size(); ++i) class_index[classes[i]] = static_cast<int>(i);

    DenseMatrix features(n, d);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::copy(feats[static_cast<std::size_t>(i)].begin(),
                  feats[static_cast<std::size_t>(i)].end(), features.row(i));
        labels[static_cast<std::size_t>(i)] = class_index[label_names[static_cast<std::size_t>(i)]];
    }

    std::ifstream cites(cites_file);
    if (!cites) throw DataError("missing file: " + cites_file.string());
    std::vector<std::pair<int, int>> edges;
    while (std::getline(cites, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b;
        if (!(ss >> a >> b)) throw DataError("malformed .cites line: " + line);
        auto ia = id_index.find(a);
        auto ib = id_index.find(b);
        if (ia == id_index.end() || ib == id_index.end()) continue;
        edges.emplace_back(ia->second, ib->second);
    }

    return build_graph(n, edges, std::move(features), std::move(labels),
                       static_cast<int>(classes.size()));
}

void save_client_dataset(const ClientDataset& c, const fs::path& dir) {
    save_dataset(c.graph, dir);
    std::vector<std::uint32_t> ids(c.global_ids.begin(), c.global_ids.end());
    write_file(dir / "global_ids.u32", ids.data(), ids.size() * sizeof(std::uint32_t));
    json splits;
    splits["train"] = c.splits.train;
    splits["val"] = c.splits.val;
    splits["test"] = c.splits.test;
    const std::string txt = splits.dump(2) + "\n";
    write_file(dir / "splits.json", txt.data(), txt.size());
}

ClientDataset load_client_dataset(const fs::path& dir) {
    ClientDataset c;
    c.graph = load_dataset(dir);
    const auto buf = read_file(dir / "global_ids.u32");
    if (buf.size() != static_cast<std::size_t>(c.graph.num_nodes) * 4)
        throw DataError("global_ids.u32: size does not match num_nodes");
    c.global_ids.resize(static_cast<std::size_t>(c.graph.num_nodes));
    for (int i = 0; i < c.graph.num_nodes; ++i) {
        std::uint32_t v;
        std::memcpy(&v, buf.data() + static_cast<std::size_t>(i) * 4, 4);
        c.global_ids[static_cast<std::size_t>(i)] = static_cast<int>(v);
    }
    const json splits = read_json(dir / "splits.json");
    c.splits.train = splits.value("train", std::vector<int>{});
    c.splits.val = splits.value("val", std::vector<int>{});
    c.splits.test = splits.value("test", std::vector<int>{});
    for (const auto* part : {&c.splits.train, &c.splits.val, &c.splits.test}) {
        for (int v : *part) {
            if (v < 0 || v >= c.graph.num_nodes)
                throw DataError("splits.json: node index out of range");
        }
    }
    return c;
}

std::vector<ClientDataset> load_scenario(const fs::path& dir) {
    std::vector<fs::path> client_dirs;
    if (!fs::is_directory(dir)) throw DataError("not a scenario directory: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && entry.path().filename().string().rfind("client_", 0) == 0)
            client_dirs.push_back(entry.path());
    }
    if (client_dirs.empty()) throw DataError("no client_### directories in " + dir.string());
    std::sort(client_dirs.begin(), client_dirs.end());
    std::vector<ClientDataset> clients;
    clients.reserve(client_dirs.size());
    for (const auto& p : client_dirs) clients.push_back(load_client_dataset(p));
    return clients;
}

}  // namespace fedgrains
