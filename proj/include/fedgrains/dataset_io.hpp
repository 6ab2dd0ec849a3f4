#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fedgrains/graph.hpp"

namespace fedgrains {

// On-disk dataset directory:
//   meta.json     {"num_nodes": int, "num_features": int, "num_classes": int}
//   features.f64  row-major N x d little-endian doubles
//   labels.u32    N little-endian uint32
//   edges.u32     2E little-endian uint32, (src,dst) pairs
// Loading symmetrizes, drops self-loops and duplicate edges, and validates
// counts. Errors surface as DataError.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Graph load_dataset(const std::filesystem::path& dir);
void save_dataset(const Graph& g, const std::filesystem::path& dir);

// Planetoid-style text ingestion:
//   <name>.content  lines "id f_1 ... f_d label"
//   <name>.cites    lines "citing cited"
// Node order follows .content; label strings are mapped to class ids in
// sorted order. Citations referencing unknown ids are skipped.
Graph ingest_planetoid(const std::filesystem::path& content_file,
                       const std::filesystem::path& cites_file);

// Client dataset directory = dataset format + global_ids.u32 + splits.json.
void save_client_dataset(const ClientDataset& c, const std::filesystem::path& dir);
ClientDataset load_client_dataset(const std::filesystem::path& dir);

// Scenario directory written by the partition command: client_### subdirs
// plus scenario.json.
std::vector<ClientDataset> load_scenario(const std::filesystem::path& dir);

}  // namespace fedgrains
