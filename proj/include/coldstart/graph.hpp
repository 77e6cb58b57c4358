#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coldstart/matrix.hpp"

namespace coldstart {

/// Immutable simple undirected graph in symmetric CSR form, with dense vertex
/// features and optional ground-truth labels.
///
/// Neighbor lists are sorted, free of duplicates and self-loops, and symmetric.
class Graph {
public:
    Graph() = default;

    /// Builds the CSR from an edge list. Self-loops are dropped and parallel or
    /// reversed duplicates collapse into one undirected edge. Throws
    /// ValidationError for out-of-range endpoints, labels outside
    /// [0, num_classes), or a feature matrix whose row count is not num_vertices.
    static Graph from_edges(std::size_t num_vertices, std::span<const std::pair<Index, Index>> edges,
                            DenseMatrix features, std::optional<std::vector<int>> labels = std::nullopt,
                            std::size_t num_classes = 0);

    std::size_t num_vertices() const noexcept { return num_vertices_; }
    /// Number of undirected edges.
    std::size_t num_edges() const noexcept { return neighbors_.size() / 2; }
    std::size_t degree(Index v) const noexcept { return offsets_[v + 1] - offsets_[v]; }
    std::span<const Index> neighbors(Index v) const noexcept {
        return {neighbors_.data() + offsets_[v], degree(v)};
    }
    const std::vector<std::size_t>& csr_offsets() const noexcept { return offsets_; }
    const std::vector<Index>& csr_neighbors() const noexcept { return neighbors_; }

    const DenseMatrix& features() const noexcept { return features_; }
    std::size_t feature_dim() const noexcept { return features_.cols(); }

    bool has_labels() const noexcept { return labels_.has_value(); }
    /// Ground-truth labels. Precondition: has_labels().
    const std::vector<int>& labels() const { return labels_.value(); }
    std::size_t num_classes() const noexcept { return num_classes_; }

    /// Human-readable class names (text datasets). Empty if unknown.
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }
    void set_class_names(std::vector<std::string> names);
    /// Name of class c; the decimal index when no names are attached.
    std::string class_name(std::size_t c) const;

    /// Each undirected edge once, as (u, v) with u < v, in CSR order.
    std::vector<std::pair<Index, Index>> edge_list() const;

    /// Same topology and labels with a replacement feature matrix.
    Graph with_features(DenseMatrix features) const;

    bool operator==(const Graph&) const = default;

private:
    std::size_t num_vertices_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<Index> neighbors_;
    DenseMatrix features_;
    std::optional<std::vector<int>> labels_;
    std::size_t num_classes_ = 0;
    std::vector<std::string> class_names_;
};

enum class AdjacencyMode {
    PlainSymmetric,     // D^-1/2 A D^-1/2
    SelfLoopSymmetric,  // the same construction applied to A + I
};

/// Symmetrically normalized adjacency operator.
struct NormalizedAdjacency {
    CsrMatrix matrix;
    AdjacencyMode mode = AdjacencyMode::PlainSymmetric;

    std::size_t num_vertices() const noexcept { return matrix.rows; }
    /// Weight of the stored entry (u, v), or 0 when absent.
    double weight(Index u, Index v) const noexcept;
};

NormalizedAdjacency normalize_adjacency(const Graph& g, AdjacencyMode mode);

DenseMatrix spmm(const NormalizedAdjacency& a, const DenseMatrix& x);

/// Class-insensitive edge homophily:
///   H = 1/(C-1) * sum_k max(0, h_k - |C_k|/|V|)
/// with h_k = (edges inside class k) / (edges touching class k).
/// Returns 0 for an edgeless graph. Throws ValidationError without labels.
double homophily_ratio(const Graph& g);

}  // namespace coldstart
