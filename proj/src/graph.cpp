#include "coldstart/graph.hpp"

#include <algorithm>
#include <cmath>

#include "coldstart/error.hpp"

namespace coldstart {

Graph Graph::from_edges(std::size_t num_vertices, std::span<const std::pair<Index, Index>> edges,
                        DenseMatrix features, std::optional<std::vector<int>> labels,
                        std::size_t num_classes) {
    if (features.rows() != num_vertices) {
        throw ValidationError("feature matrix has " + std::to_string(features.rows()) + " rows for " +
                              std::to_string(num_vertices) + " vertices");
    }
    if (labels) {
        if (labels->size() != num_vertices) {
            throw ValidationError("label vector has " + std::to_string(labels->size()) + " entries for " +
                                  std::to_string(num_vertices) + " vertices");
        }
        if (num_classes == 0) {
            for (int l : *labels) num_classes = std::max(num_classes, static_cast<std::size_t>(std::max(l, 0)) + 1);
        }
        for (std::size_t v = 0; v < labels->size(); ++v) {
            const int l = (*labels)[v];
            if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
                throw ValidationError("label " + std::to_string(l) + " of vertex " + std::to_string(v) +
                                      " outside [0, " + std::to_string(num_classes) + ")");
            }
        }
    }

    std::vector<std::vector<Index>> adj(num_vertices);
    const auto n = static_cast<Index>(num_vertices);
    for (const auto& [u, v] : edges) {
        if (u < 0 || v < 0 || u >= n || v >= n) {
            throw ValidationError("edge [" + std::to_string(u) + ", " + std::to_string(v) +
                                  "] references a vertex outside [0, " + std::to_string(num_vertices) + ")");
        }
        if (u == v) continue;
        adj[u].push_back(v);
        adj[v].push_back(u);
    }

    Graph g;
    g.num_vertices_ = num_vertices;
    g.offsets_.assign(num_vertices + 1, 0);
    for (std::size_t v = 0; v < num_vertices; ++v) {
        auto& list = adj[v];
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        g.offsets_[v + 1] = g.offsets_[v] + list.size();
    }
    g.neighbors_.reserve(g.offsets_.back());
    for (auto& list : adj) g.neighbors_.insert(g.neighbors_.end(), list.begin(), list.end());
    g.features_ = std::move(features);
    g.labels_ = std::move(labels);
    g.num_classes_ = num_classes;
    return g;
}

void Graph::set_class_names(std::vector<std::string> names) {
    if (!names.empty() && names.size() != num_classes_) {
        throw ValidationError("expected " + std::to_string(num_classes_) + " class names, got " +
                              std::to_string(names.size()));
    }
    class_names_ = std::move(names);
}

std::string Graph::class_name(std::size_t c) const {
    return c < class_names_.size() ? class_names_[c] : std::to_string(c);
}

std::vector<std::pair<Index, Index>> Graph::edge_list() const {
    std::vector<std::pair<Index, Index>> out;
    out.reserve(num_edges());
    for (Index u = 0; u < static_cast<Index>(num_vertices_); ++u) {
        for (Index v : neighbors(u))
            if (u < v) out.emplace_back(u, v);
    }
    return out;
}

Graph Graph::with_features(DenseMatrix features) const {
    if (features.rows() != num_vertices_) {
        throw ValidationError("replacement features have the wrong row count");
    }
    Graph g = *this;
    g.features_ = std::move(features);
    return g;
}

double NormalizedAdjacency::weight(Index u, Index v) const noexcept {
    auto cols = matrix.row_indices(static_cast<std::size_t>(u));
    auto it = std::lower_bound(cols.begin(), cols.end(), v);
    if (it == cols.end() || *it != v) return 0.0;
    return matrix.row_values(static_cast<std::size_t>(u))[static_cast<std::size_t>(it - cols.begin())];
}

NormalizedAdjacency normalize_adjacency(const Graph& g, AdjacencyMode mode) {
    const std::size_t n = g.num_vertices();
    const bool loops = mode == AdjacencyMode::SelfLoopSymmetric;
    std::vector<double> inv_sqrt(n);
    for (std::size_t v = 0; v < n; ++v) {
        const double d = static_cast<double>(g.degree(static_cast<Index>(v))) + (loops ? 1.0 : 0.0);
        inv_sqrt[v] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
    }

    NormalizedAdjacency out;
    out.mode = mode;
    CsrMatrix& m = out.matrix;
    m.rows = n;
    m.cols = n;
    m.offsets.assign(n + 1, 0);
    m.indices.reserve(g.csr_neighbors().size() + (loops ? n : 0));
    m.values.reserve(m.indices.capacity());
    for (std::size_t v = 0; v < n; ++v) {
        const auto vi = static_cast<Index>(v);
        bool self_done = !loops;
        for (Index u : g.neighbors(vi)) {
            if (!self_done && u > vi) {
                m.indices.push_back(vi);
                m.values.push_back(inv_sqrt[v] * inv_sqrt[v]);
                self_done = true;
            }
            m.indices.push_back(u);
            m.values.push_back(inv_sqrt[v] * inv_sqrt[static_cast<std::size_t>(u)]);
        }
        if (!self_done) {
            m.indices.push_back(vi);
            m.values.push_back(inv_sqrt[v] * inv_sqrt[v]);
        }
        m.offsets[v + 1] = m.indices.size();
    }
    return out;
}

DenseMatrix spmm(const NormalizedAdjacency& a, const DenseMatrix& x) { return spmm(a.matrix, x); }

double homophily_ratio(const Graph& g) {
    if (!g.has_labels()) throw ValidationError("homophily_ratio requires ground-truth labels");
    const std::size_t classes = g.num_classes();
    if (g.num_edges() == 0 || classes < 2) return 0.0;

    const auto& labels = g.labels();
    std::vector<double> inside(classes, 0.0);
    std::vector<double> touching(classes, 0.0);
    std::vector<double> members(classes, 0.0);
    for (int l : labels) members[static_cast<std::size_t>(l)] += 1.0;
    for (const auto& [u, v] : g.edge_list()) {
        const auto lu = static_cast<std::size_t>(labels[u]);
        const auto lv = static_cast<std::size_t>(labels[v]);
        if (lu == lv) {
            inside[lu] += 1.0;
            touching[lu] += 1.0;
        } else {
            touching[lu] += 1.0;
            touching[lv] += 1.0;
        }
    }

    const double n = static_cast<double>(g.num_vertices());
    double total = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
        const double h = touching[k] > 0.0 ? inside[k] / touching[k] : 0.0;
        total += std::max(0.0, h - members[k] / n);
    }
    return total / static_cast<double>(classes - 1);
}

}  // namespace coldstart
