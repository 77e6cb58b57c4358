#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "coldstart/matrix.hpp"

namespace coldstart {

struct Clustering {
    std::size_t k = 0;
    std::vector<int> assignment;
    /// Point indices of the medoids (k-medoids only).
    std::vector<Index> medoids;
    /// k x dim centroids (k-means only).
    DenseMatrix centroids;
    /// Sum of distances for k-medoids, sum of squared distances for k-means.
    double cost = 0.0;
    /// Cost after initialization and after every improving pass or Lloyd step.
    std::vector<double> cost_history;
};

/// PAM: greedy BUILD followed by best-improvement SWAP passes until no swap
/// lowers the total Euclidean distance. The seed only orders candidates, so it
/// matters for exact ties alone.
Clustering kmedoids(const DenseMatrix& points, std::size_t k, std::uint64_t seed = 0);

/// k-means++ seeding then Lloyd iterations until the assignment is stable or
/// max_iter is reached. Empty clusters are re-seeded at the farthest point.
/// With n_init > 1 the lowest-cost restart is kept.
Clustering kmeans(const DenseMatrix& points, std::size_t k, std::uint64_t seed = 0, std::size_t max_iter = 300,
                  std::size_t n_init = 1);

/// Sum of squared distances of every point to its assigned centroid.
double distortion_score(const DenseMatrix& points, const Clustering& c);

struct ClassEstimate {
    std::size_t k = 0;
    /// True when every distortion in the sweep is equal and no elbow exists.
    bool degenerate = false;
    std::size_t k_min = 0;
    std::size_t k_max = 0;
    /// distortions[i] belongs to k_min + i.
    std::vector<double> distortions;
};

/// Index of the elbow: the point farthest below the chord joining the first and
/// last points, on min-max normalized axes. Returns 0 for fewer than 3 values.
std::size_t elbow_index(const std::vector<double>& values);

/// Sweeps k-means over [k_min, k_max] (clipped to n - 1) and picks the elbow of
/// the distortion curve.
ClassEstimate estimate_num_classes(const DenseMatrix& points, std::size_t k_min = 2, std::size_t k_max = 100,
                                   std::uint64_t seed = 0, std::size_t n_init = 1);

}  // namespace coldstart
