#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coldstart/graph.hpp"

namespace coldstart {

struct TextDataset {
    Graph graph;
    /// Original document ids, indexed by vertex.
    std::vector<std::string> vertex_ids;
    /// Citation lines whose endpoints were not in the content file.
    std::size_t dropped_edges = 0;
};

/// Reads the two-file citation layout: a content file with one
/// "id feat_0 ... feat_{F-1} label_name" line per vertex and a cites file with
/// one "cited_id citing_id" line per edge. Labels are numbered in order of first
/// appearance. Edges naming unknown ids are skipped and counted.
TextDataset load_text_dataset(const std::filesystem::path& content_path,
                              const std::filesystem::path& cites_path);

/// JSON document:
/// {"num_vertices": n, "num_classes": c|null, "features": [[...]...],
///  "edges": [[u,v]...], "labels": [...]|null}
Graph graph_from_json(const std::string& text);
std::string graph_to_json(const Graph& g);

Graph load_json_graph(const std::filesystem::path& path);
void write_json_graph(const Graph& g, const std::filesystem::path& path);

struct SbmParams {
    std::size_t num_vertices = 300;
    std::size_t num_classes = 3;
    double p_in = 0.1;
    double p_out = 0.01;
    std::size_t feature_dim = 16;
    double feature_shift = 1.0;
    std::uint64_t seed = 0;
};

/// Planted-partition graph: near-equal blocks, intra-block edge probability
/// p_in, inter-block p_out, unit-Gaussian features around a per-class mean of
/// norm feature_shift. Class means are coordinate axes when
/// feature_dim >= num_classes, random unit directions otherwise.
Graph generate_sbm(const SbmParams& params);

/// Divides each feature row by its sum of absolute values; zero rows stay zero.
DenseMatrix row_normalize_l1(const DenseMatrix& features);

}  // namespace coldstart
