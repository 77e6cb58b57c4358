#include "coldstart/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "coldstart/error.hpp"

namespace coldstart {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_k(std::size_t k, std::size_t n, const char* who) {
    if (n == 0) throw Error(std::string(who) + ": no points");
    if (k == 0 || k > n) {
        throw Error(std::string(who) + ": k = " + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
    }
}

struct Nearest {
    std::vector<int> first;
    std::vector<double> d1;
    std::vector<double> d2;
};

Nearest nearest_medoids(const DenseMatrix& dist, const std::vector<Index>& medoids) {
    const std::size_t n = dist.rows();
    Nearest out{std::vector<int>(n, 0), std::vector<double>(n, kInf), std::vector<double>(n, kInf)};
    for (std::size_t o = 0; o < n; ++o) {
        for (std::size_t i = 0; i < medoids.size(); ++i) {
            const double d = dist(o, static_cast<std::size_t>(medoids[i]));
            if (d < out.d1[o]) {
                out.d2[o] = out.d1[o];
                out.d1[o] = d;
                out.first[o] = static_cast<int>(i);
            } else if (d < out.d2[o]) {
                out.d2[o] = d;
            }
        }
    }
    // A medoid always belongs to its own cluster, even next to a duplicate medoid.
    for (std::size_t i = 0; i < medoids.size(); ++i) {
        const auto m = static_cast<std::size_t>(medoids[i]);
        if (out.first[m] != static_cast<int>(i)) {
            out.d2[m] = out.d1[m];
            out.d1[m] = 0.0;
            out.first[m] = static_cast<int>(i);
        }
    }
    return out;
}

}  // namespace

Clustering kmedoids(const DenseMatrix& points, std::size_t k, std::uint64_t seed) {
    const std::size_t n = points.rows();
    check_k(k, n, "kmedoids");

    DenseMatrix dist(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = euclidean_distance(points.row(i), points.row(j));
            dist(i, j) = d;
            dist(j, i) = d;
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<Index> medoids;
    std::vector<char> is_medoid(n, 0);
    std::vector<double> nearest(n, kInf);
    for (std::size_t t = 0; t < k; ++t) {
        double best_gain = -kInf;
        std::size_t best = n;
        for (std::size_t c : order) {
            if (is_medoid[c]) continue;
            double gain = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double cur = std::isinf(nearest[j]) ? 0.0 : nearest[j];
                gain += std::isinf(nearest[j]) ? -dist(c, j) : std::max(0.0, cur - dist(c, j));
            }
            if (gain > best_gain) {
                best_gain = gain;
                best = c;
            }
        }
        medoids.push_back(static_cast<Index>(best));
        is_medoid[best] = 1;
        for (std::size_t j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], dist(best, j));
    }

    Clustering out;
    out.k = k;
    Nearest near = nearest_medoids(dist, medoids);
    auto total = [&] { return std::accumulate(near.d1.begin(), near.d1.end(), 0.0); };
    out.cost = total();
    out.cost_history.push_back(out.cost);

    std::vector<double> delta(k);
    for (;;) {
        double best_delta = 0.0;
        std::size_t best_c = n;
        std::size_t best_i = k;
        for (std::size_t c : order) {
            if (is_medoid[c]) continue;
            double shared = 0.0;
            std::fill(delta.begin(), delta.end(), 0.0);
            for (std::size_t o = 0; o < n; ++o) {
                const double doc = dist(o, c);
                const double gain = std::min(doc - near.d1[o], 0.0);
                shared += gain;
                delta[static_cast<std::size_t>(near.first[o])] += std::min(doc, near.d2[o]) - near.d1[o] - gain;
            }
            for (std::size_t i = 0; i < k; ++i) {
                if (shared + delta[i] < best_delta) {
                    best_delta = shared + delta[i];
                    best_c = c;
                    best_i = i;
                }
            }
        }
        if (best_c == n || best_delta > -1e-12 * std::max(1.0, out.cost)) break;
        is_medoid[static_cast<std::size_t>(medoids[best_i])] = 0;
        medoids[best_i] = static_cast<Index>(best_c);
        is_medoid[best_c] = 1;
        near = nearest_medoids(dist, medoids);
        const double next = total();
        if (!(next < out.cost)) break;
        out.cost = next;
        out.cost_history.push_back(out.cost);
    }

    out.medoids = std::move(medoids);
    out.assignment = std::move(near.first);
    return out;
}

namespace {

struct LloydRun {
    std::vector<int> assign;
    DenseMatrix centers;
    double cost = 0.0;
    std::vector<double> history;
};

double total_cost(const DenseMatrix& x, const DenseMatrix& centers, const std::vector<int>& assign) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        s += squared_distance(x.row(i), centers.row(static_cast<std::size_t>(assign[i])));
    }
    return s;
}

// Point-to-center distances. Sparse inputs go through the nonzeros only:
// |x - c|^2 = |c|^2 + sum over nz(x) of ((x_t - c_t)^2 - c_t^2).
class PointSet {
public:
    explicit PointSet(const DenseMatrix& x) : x_(x) {
        std::size_t nz = 0;
        for (double v : x.data()) nz += v != 0.0 ? 1 : 0;
        sparse_ = x.cols() >= 32 && nz * 4 < x.data().size();
        if (!sparse_) return;
        start_.reserve(x.rows() + 1);
        start_.push_back(0);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const auto row = x.row(i);
            for (std::size_t t = 0; t < row.size(); ++t) {
                if (row[t] == 0.0) continue;
                idx_.push_back(static_cast<std::uint32_t>(t));
                val_.push_back(row[t]);
            }
            start_.push_back(idx_.size());
        }
    }

    const DenseMatrix& dense() const { return x_; }

    static double norm2(std::span<const double> c) {
        double s = 0.0;
        for (double v : c) s += v * v;
        return s;
    }

    double dist(std::size_t i, std::span<const double> c, double c_norm2) const {
        if (!sparse_) return std::sqrt(squared_distance(x_.row(i), c));
        double s = c_norm2;
        for (std::size_t p = start_[i]; p < start_[i + 1]; ++p) {
            const double ct = c[idx_[p]];
            const double diff = val_[p] - ct;
            s += diff * diff - ct * ct;
        }
        return std::sqrt(std::max(s, 0.0));
    }

private:
    const DenseMatrix& x_;
    bool sparse_ = false;
    std::vector<std::size_t> start_;
    std::vector<std::uint32_t> idx_;
    std::vector<double> val_;
};

LloydRun lloyd_once(const PointSet& pts, std::size_t k, std::mt19937_64& rng, std::size_t max_iter) {
    const DenseMatrix& x = pts.dense();
    const std::size_t n = x.rows();
    const std::size_t dim = x.cols();
    LloydRun run;
    run.centers = DenseMatrix(k, dim);
    run.assign.assign(n, 0);
    std::vector<double> cnorm(k, 0.0);

    // k-means++ seeding; nearest and second-nearest distances fall out of it.
    std::vector<double> upper(n, kInf), lower(n, kInf);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    for (std::size_t j = 0; j < k; ++j) {
        std::size_t pick = first;
        if (j > 0) {
            double mass = 0.0;
            for (double u : upper) mass += u * u;
            if (mass > 0.0) {
                double r = unit(rng) * mass;
                pick = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    r -= upper[i] * upper[i];
                    if (r < 0.0) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
            }
        }
        std::copy(x.row(pick).begin(), x.row(pick).end(), run.centers.row(j).begin());
        cnorm[j] = PointSet::norm2(run.centers.row(j));
        for (std::size_t i = 0; i < n; ++i) {
            const double d = pts.dist(i, run.centers.row(j), cnorm[j]);
            if (d < upper[i]) {
                lower[i] = upper[i];
                upper[i] = d;
                run.assign[i] = static_cast<int>(j);
            } else if (d < lower[i]) {
                lower[i] = d;
            }
        }
    }

    std::vector<double> half_gap(k);
    std::vector<double> shift(k);
    std::vector<std::size_t> counts(k);
    DenseMatrix next(k, dim);
    bool first_pass = true;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        std::size_t changed = 0;
        if (!first_pass) {
            // Hamerly's bound test: skip points whose assignment cannot change.
            for (std::size_t j = 0; j < k; ++j) {
                double m = kInf;
                for (std::size_t q = 0; q < k; ++q)
                    if (q != j) m = std::min(m, std::sqrt(squared_distance(run.centers.row(j), run.centers.row(q))));
                half_gap[j] = 0.5 * m;
            }
            for (std::size_t i = 0; i < n; ++i) {
                const auto a = static_cast<std::size_t>(run.assign[i]);
                const double bound = std::max(half_gap[a], lower[i]);
                if (upper[i] <= bound) continue;
                upper[i] = pts.dist(i, run.centers.row(a), cnorm[a]);
                if (upper[i] <= bound) continue;
                double d1 = kInf, d2 = kInf;
                int best = 0;
                for (std::size_t j = 0; j < k; ++j) {
                    const double d = pts.dist(i, run.centers.row(j), cnorm[j]);
                    if (d < d1) {
                        d2 = d1;
                        d1 = d;
                        best = static_cast<int>(j);
                    } else if (d < d2) {
                        d2 = d;
                    }
                }
                // Keep the current center on exact ties so the cost cannot rise.
                if (d1 == upper[i]) best = static_cast<int>(a);
                if (best != run.assign[i]) ++changed;
                run.assign[i] = best;
                upper[i] = d1;
                lower[i] = d2;
            }
            if (changed == 0) break;
        }
        first_pass = false;

        next.fill(0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto a = static_cast<std::size_t>(run.assign[i]);
            ++counts[a];
            auto src = x.row(i);
            auto dst = next.row(a);
            for (std::size_t t = 0; t < dim; ++t) dst[t] += src[t];
        }
        bool reseeded = false;
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] > 0) continue;
            // Farthest point from its center, taken from a cluster that can spare it.
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto a = static_cast<std::size_t>(run.assign[i]);
                if (counts[a] < 2) continue;
                const double d = squared_distance(x.row(i), run.centers.row(a));
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far == n) continue;
            const auto old = static_cast<std::size_t>(run.assign[far]);
            auto src = x.row(far);
            auto from = next.row(old);
            auto to = next.row(j);
            for (std::size_t t = 0; t < dim; ++t) {
                from[t] -= src[t];
                to[t] = src[t];
            }
            --counts[old];
            counts[j] = 1;
            run.assign[far] = static_cast<int>(j);
            reseeded = true;
        }
        double max_shift = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            auto dst = next.row(j);
            if (counts[j] == 0) {
                std::copy(run.centers.row(j).begin(), run.centers.row(j).end(), dst.begin());
            } else {
                const double inv = 1.0 / static_cast<double>(counts[j]);
                for (double& v : dst) v *= inv;
            }
            shift[j] = std::sqrt(squared_distance(dst, run.centers.row(j)));
            max_shift = std::max(max_shift, shift[j]);
        }
        std::swap(run.centers, next);
        for (std::size_t j = 0; j < k; ++j) cnorm[j] = PointSet::norm2(run.centers.row(j));
        if (reseeded) {
            for (std::size_t i = 0; i < n; ++i) {
                upper[i] = kInf;
                lower[i] = 0.0;
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                upper[i] += shift[static_cast<std::size_t>(run.assign[i])];
                lower[i] -= max_shift;
            }
        }
        run.history.push_back(total_cost(x, run.centers, run.assign));
    }
    run.cost = total_cost(x, run.centers, run.assign);
    if (run.history.empty() || run.history.back() != run.cost) run.history.push_back(run.cost);
    return run;
}

}  // namespace

Clustering kmeans(const DenseMatrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iter,
                  std::size_t n_init) {
    check_k(k, points.rows(), "kmeans");
    std::mt19937_64 rng(seed);
    const PointSet pts(points);
    LloydRun best;
    bool have = false;
    for (std::size_t r = 0; r < std::max<std::size_t>(n_init, 1); ++r) {
        LloydRun run = lloyd_once(pts, k, rng, std::max<std::size_t>(max_iter, 1));
        if (!have || run.cost < best.cost) {
            best = std::move(run);
            have = true;
        }
    }
    Clustering out;
    out.k = k;
    out.assignment = std::move(best.assign);
    out.centroids = std::move(best.centers);
    out.cost = best.cost;
    out.cost_history = std::move(best.history);
    return out;
}

double distortion_score(const DenseMatrix& points, const Clustering& c) {
    if (c.centroids.rows() != c.k || c.assignment.size() != points.rows()) {
        throw Error("distortion_score needs a k-means clustering of these points");
    }
    return total_cost(points, c.centroids, c.assignment);
}

std::size_t elbow_index(const std::vector<double>& values) {
    const std::size_t m = values.size();
    if (m < 3) return 0;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double span = *hi - *lo;
    if (!(span > 0.0)) return 0;
    const double y0 = (values.front() - *lo) / span;
    const double y1 = (values.back() - *lo) / span;
    std::size_t best = 0;
    double best_gap = -kInf;
    for (std::size_t i = 0; i < m; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(m - 1);
        const double y = (values[i] - *lo) / span;
        const double gap = (y0 + (y1 - y0) * x) - y;
        if (gap > best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    return best;
}

ClassEstimate estimate_num_classes(const DenseMatrix& points, std::size_t k_min, std::size_t k_max,
                                   std::uint64_t seed, std::size_t n_init) {
    const std::size_t n = points.rows();
    if (k_min < 1) k_min = 1;
    ClassEstimate est;
    est.k_min = k_min;
    est.k_max = std::min(k_max, n > 0 ? n - 1 : 0);
    if (est.k_max < k_min) {
        est.k_max = k_min;
        est.k = k_min;
        est.degenerate = true;
        return est;
    }
    for (std::size_t k = k_min; k <= est.k_max; ++k) {
        const Clustering c = kmeans(points, k, seed + k, 300, n_init);
        est.distortions.push_back(distortion_score(points, c));
    }
    const auto [lo, hi] = std::minmax_element(est.distortions.begin(), est.distortions.end());
    if (*hi - *lo <= 1e-12) {
        est.k = k_min;
        est.degenerate = true;
        return est;
    }
    est.k = k_min + elbow_index(est.distortions);
    return est;
}

}  // namespace coldstart
