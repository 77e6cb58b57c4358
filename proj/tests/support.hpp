#pragma once

// Generators and dense reference implementations shared by the test files.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "coldstart/graph.hpp"
#include "coldstart/matrix.hpp"

namespace testing {

using coldstart::DenseMatrix;
using coldstart::Graph;
using coldstart::Index;

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                                 double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    DenseMatrix m(rows, cols);
    for (double& x : m.data()) x = u(rng);
    return m;
}

inline std::vector<std::pair<Index, Index>> random_edges(std::size_t n, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(p);
    std::vector<std::pair<Index, Index>> edges;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v)
            if (coin(rng)) edges.emplace_back(static_cast<Index>(u), static_cast<Index>(v));
    return edges;
}

/// Erdos-Renyi graph with random features and, when classes > 0, random labels.
inline Graph random_graph(std::size_t n, double p, std::mt19937_64& rng, std::size_t dim = 3,
                          std::size_t classes = 0) {
    const auto edges = random_edges(n, p, rng);
    DenseMatrix x = random_matrix(n, dim, rng);
    if (classes == 0) return Graph::from_edges(n, edges, std::move(x));
    std::vector<int> labels(n);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(classes) - 1);
    for (int& l : labels) l = pick(rng);
    return Graph::from_edges(n, edges, std::move(x), labels, classes);
}

inline Graph path_graph(std::size_t n, std::size_t dim = 1) {
    std::vector<std::pair<Index, Index>> edges;
    for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(static_cast<Index>(i), static_cast<Index>(i + 1));
    return Graph::from_edges(n, edges, DenseMatrix(n, dim, 1.0));
}

/// Dense adjacency straight from the edge list.
inline DenseMatrix dense_adjacency(const Graph& g, bool self_loops) {
    const std::size_t n = g.num_vertices();
    DenseMatrix a(n, n);
    for (auto [u, v] : g.edge_list()) {
        a(static_cast<std::size_t>(u), static_cast<std::size_t>(v)) = 1.0;
        a(static_cast<std::size_t>(v), static_cast<std::size_t>(u)) = 1.0;
    }
    if (self_loops)
        for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
    return a;
}

/// D^-1/2 A D^-1/2 computed densely; zero-degree rows stay zero.
inline DenseMatrix dense_normalized(const Graph& g, bool self_loops) {
    DenseMatrix a = dense_adjacency(g, self_loops);
    const std::size_t n = a.rows();
    std::vector<double> deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (a(i, j) != 0.0) a(i, j) /= std::sqrt(deg[i] * deg[j]);
    return a;
}

inline DenseMatrix naive_matmul(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < a.cols(); ++t) s += a(i, t) * b(t, j);
            c(i, j) = s;
        }
    return c;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

/// Central differences of f at x, one coordinate at a time.
inline DenseMatrix numeric_gradient(const std::function<double(const DenseMatrix&)>& f, const DenseMatrix& x,
                                    double h = 1e-5) {
    DenseMatrix g(x.rows(), x.cols());
    DenseMatrix probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = probe.data()[i];
        probe.data()[i] = orig + h;
        const double up = f(probe);
        probe.data()[i] = orig - h;
        const double down = f(probe);
        probe.data()[i] = orig;
        g.data()[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// max |a - n| / max(1e-6, |a|, |n|) over all coordinates.
inline double relative_error(const DenseMatrix& analytic, const DenseMatrix& numeric) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic.data()[i];
        const double n = numeric.data()[i];
        const double scale = std::max({1e-6, std::abs(a), std::abs(n)});
        worst = std::max(worst, std::abs(a - n) / scale);
    }
    return worst;
}

/// Well-separated Gaussian blobs; returns points and generating labels.
inline std::pair<DenseMatrix, std::vector<int>> blobs(std::size_t n, std::size_t k, std::size_t dim,
                                                      double separation, double spread, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    DenseMatrix centers(k, dim);
    for (double& c : centers.data()) c = normal(rng) * separation;
    DenseMatrix x(n, dim);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % k;
        labels[i] = static_cast<int>(c);
        for (std::size_t d = 0; d < dim; ++d) x(i, d) = centers(c, d) + spread * normal(rng);
    }
    return {x, labels};
}

}  // namespace testing
