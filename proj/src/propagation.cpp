#include "coldstart/propagation.hpp"

#include <algorithm>
#include <cmath>

#include "coldstart/error.hpp"

namespace coldstart {

PageRankScores pagerank(const Graph& g, double damping, double tol, std::size_t max_iter) {
    if (!(damping > 0.0 && damping < 1.0)) throw Error("pagerank damping must lie in (0, 1)");
    if (!(tol > 0.0)) throw Error("pagerank tolerance must be positive");
    const std::size_t n = g.num_vertices();
    PageRankScores out;
    out.damping = damping;
    if (n == 0) {
        out.converged = true;
        return out;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> r(n, inv_n), next(n);
    for (std::size_t it = 0; it < max_iter; ++it) {
        double dangling = 0.0;
        for (std::size_t v = 0; v < n; ++v)
            if (g.degree(static_cast<Index>(v)) == 0) dangling += r[v];
        const double base = (1.0 - damping) * inv_n + damping * dangling * inv_n;
        std::fill(next.begin(), next.end(), base);
        for (std::size_t u = 0; u < n; ++u) {
            const auto nb = g.neighbors(static_cast<Index>(u));
            if (nb.empty()) continue;
            const double share = damping * r[u] / static_cast<double>(nb.size());
            for (Index v : nb) next[static_cast<std::size_t>(v)] += share;
        }
        double total = 0.0;
        for (double x : next) total += x;
        double change = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            next[v] /= total;
            change += std::abs(next[v] - r[v]);
        }
        r.swap(next);
        out.iterations = it + 1;
        if (change < tol) {
            out.converged = true;
            break;
        }
    }
    out.scores = std::move(r);
    return out;
}

DenseMatrix label_propagate(const NormalizedAdjacency& a, const DenseMatrix& seeds, double alpha,
                            std::size_t hops) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("label propagation alpha must lie in [0, 1]");
    if (seeds.rows() != a.num_vertices()) throw DimensionError("label_propagate: seed rows != vertices");
    DenseMatrix y = seeds;
    for (std::size_t h = 0; h < hops; ++h) {
        DenseMatrix ay = spmm(a, y);
        auto& out = ay.data();
        const auto& prev = y.data();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * out[i] + (1.0 - alpha) * prev[i];
        y = std::move(ay);
    }
    return y;
}

double normalized_entropy(std::span<const double> row) {
    double mass = 0.0;
    for (double x : row) mass += x;
    if (!(mass > 0.0) || row.size() < 2) return mass > 0.0 ? 0.0 : 1.0;
    double h = 0.0;
    for (double x : row) {
        if (x <= 0.0) continue;
        const double p = x / mass;
        h -= p * std::log(p);
    }
    return h / std::log(static_cast<double>(row.size()));
}

std::vector<PseudoLabel> filter_pseudo_labels(const DenseMatrix& y, double threshold,
                                              const std::vector<char>& exclude) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("entropy threshold must lie in [0, 1]");
    if (!exclude.empty() && exclude.size() != y.rows()) throw DimensionError("exclude mask size != rows");
    std::vector<PseudoLabel> out;
    for (std::size_t v = 0; v < y.rows(); ++v) {
        if (!exclude.empty() && exclude[v]) continue;
        auto row = y.row(v);
        double mass = 0.0;
        for (double x : row) mass += x;
        if (!(mass > 0.0)) continue;
        const double h = normalized_entropy(row);
        if (h <= threshold) out.push_back({static_cast<Index>(v), static_cast<int>(argmax(row)), h});
    }
    return out;
}

DenseMatrix propagate_features(const NormalizedAdjacency& a, const DenseMatrix& x, std::size_t hops) {
    if (x.rows() != a.num_vertices()) throw DimensionError("propagate_features: feature rows != vertices");
    DenseMatrix out = x;
    for (std::size_t h = 0; h < hops; ++h) out = spmm(a, out);
    return out;
}

}  // namespace coldstart
