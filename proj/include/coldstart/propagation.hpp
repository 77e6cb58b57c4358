#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "coldstart/graph.hpp"
#include "coldstart/matrix.hpp"

namespace coldstart {

struct PageRankScores {
    std::vector<double> scores;
    double damping = 0.85;
    bool converged = false;
    std::size_t iterations = 0;
};

/// Power iteration with uniform teleport. Dangling mass is spread uniformly.
/// Stops when the L1 change drops below tol or after max_iter sweeps.
PageRankScores pagerank(const Graph& g, double damping = 0.85, double tol = 1e-9, std::size_t max_iter = 200);

/// Applies Y <- alpha * A Y + (1 - alpha) * Y `hops` times. Seed rows are not
/// re-clamped between hops.
DenseMatrix label_propagate(const NormalizedAdjacency& a, const DenseMatrix& seeds, double alpha = 0.9,
                            std::size_t hops = 3);

struct PseudoLabel {
    Index vertex;
    int label;
    double entropy;  // normalized to [0, 1]
};

/// Normalized Shannon entropy of a nonnegative row (natural log over ln(cols)).
/// Returns 1 for a zero-mass row.
double normalized_entropy(std::span<const double> row);

/// Keeps the argmax label of every vertex whose row has positive mass and
/// normalized entropy <= threshold. Vertices flagged in `exclude` are skipped.
std::vector<PseudoLabel> filter_pseudo_labels(const DenseMatrix& y, double threshold,
                                              const std::vector<char>& exclude);

/// X left-multiplied `hops` times by the operator, without nonlinearity.
DenseMatrix propagate_features(const NormalizedAdjacency& a, const DenseMatrix& x, std::size_t hops);

}  // namespace coldstart
