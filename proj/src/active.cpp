#include "coldstart/active.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "coldstart/clustering.hpp"
#include "coldstart/error.hpp"

namespace coldstart {

std::string_view to_string(Setting s) {
    switch (s) {
        case Setting::Balanced: return "balanced";
        case Setting::Unbalanced: return "unbalanced";
        case Setting::UnknownK: return "unknown-k";
    }
    return "?";
}

std::string_view to_string(SamplerKind s) {
    switch (s) {
        case SamplerKind::Random: return "random";
        case SamplerKind::Entropy: return "entropy";
        case SamplerKind::PageRank: return "pagerank";
        case SamplerKind::Medoid: return "medoid";
        case SamplerKind::FeatProp: return "featprop";
    }
    return "?";
}

Setting parse_setting(std::string_view name) {
    if (name == "balanced") return Setting::Balanced;
    if (name == "unbalanced") return Setting::Unbalanced;
    if (name == "unknown-k" || name == "unknown_k") return Setting::UnknownK;
    throw Error("unknown setting '" + std::string(name) + "' (expected balanced, unbalanced or unknown-k)");
}

SamplerKind parse_sampler(std::string_view name) {
    if (name == "random") return SamplerKind::Random;
    if (name == "entropy") return SamplerKind::Entropy;
    if (name == "pagerank") return SamplerKind::PageRank;
    if (name == "medoid") return SamplerKind::Medoid;
    if (name == "featprop") return SamplerKind::FeatProp;
    throw Error("unknown sampler '" + std::string(name) + "' (expected random, entropy, pagerank, medoid or featprop)");
}

LabelState::LabelState(std::vector<char> eligible, std::size_t budget_total)
    : eligible_(std::move(eligible)), pool_(eligible_), human_(eligible_.size(), -1), budget_total_(budget_total) {
    pool_count_ = static_cast<std::size_t>(std::count(pool_.begin(), pool_.end(), 1));
}

void LabelState::add_human(Index v, int label) {
    if (v < 0 || static_cast<std::size_t>(v) >= human_.size()) throw Error("vertex out of range");
    if (!in_pool(v)) throw Error("vertex " + std::to_string(v) + " is not in the unlabeled pool");
    if (budget_left() == 0) throw Error("label budget exhausted");
    if (label < 0) throw ValidationError("labels must be nonnegative");
    pool_[static_cast<std::size_t>(v)] = 0;
    --pool_count_;
    human_[static_cast<std::size_t>(v)] = label;
    order_.push_back(v);
}

void LabelState::set_pseudo(std::vector<LabeledVertex> pseudo) {
    for (const auto& p : pseudo) {
        if (human_label(p.vertex) >= 0) throw Error("pseudo-label on a human-labeled vertex");
    }
    pseudo_ = std::move(pseudo);
}

std::vector<LabeledVertex> LabelState::training_set() const {
    std::vector<LabeledVertex> out;
    out.reserve(order_.size() + pseudo_.size());
    for (Index v : order_) out.push_back({v, human_label(v), true});
    out.insert(out.end(), pseudo_.begin(), pseudo_.end());
    return out;
}

Partition partition_vertices(Setting setting, const Graph& g, const DenseMatrix& space, const LabelState& state,
                             std::size_t k, std::uint64_t seed) {
    const std::size_t n = g.num_vertices();
    Partition p;
    p.cell.assign(n, -1);
    if (setting == Setting::Balanced) {
        if (!g.has_labels()) throw ValidationError("the balanced setting needs ground-truth labels");
        for (std::size_t v = 0; v < n; ++v)
            if (state.eligible()[v]) p.cell[v] = g.labels()[v];
        p.num_cells = g.num_classes();
        return p;
    }
    if (space.rows() != n) throw DimensionError("partition space must have one row per vertex");
    std::vector<Index> members;
    for (std::size_t v = 0; v < n; ++v)
        if (state.eligible()[v]) members.push_back(static_cast<Index>(v));
    if (state.pool_size() == 0 || members.empty() || k == 0) return p;
    if (k > state.pool_size()) {
        k = state.pool_size();
        p.clipped = true;
    }
    const Clustering c = kmedoids(select_rows(space, members), k, seed);
    for (std::size_t i = 0; i < members.size(); ++i) p.cell[static_cast<std::size_t>(members[i])] = c.assignment[i];
    p.num_cells = k;
    return p;
}

double row_entropy(std::span<const double> row) {
    double mass = 0.0;
    for (double x : row) mass += std::max(x, 0.0);
    if (!(mass > 0.0)) return row.empty() ? 0.0 : std::log(static_cast<double>(row.size()));
    double h = 0.0;
    for (double x : row) {
        if (x <= 0.0) continue;
        const double q = x / mass;
        h -= q * std::log(q);
    }
    return h;
}

namespace {

std::vector<Index> weighted_draws(const std::vector<Index>& cell, std::vector<double> w, std::size_t quota,
                                  std::mt19937_64& rng) {
    std::vector<Index> out;
    std::vector<char> taken(cell.size(), 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t t = 0; t < quota; ++t) {
        double mass = 0.0;
        for (std::size_t i = 0; i < cell.size(); ++i)
            if (!taken[i]) mass += w[i];
        std::size_t pick = cell.size();
        if (mass > 0.0) {
            double r = unit(rng) * mass;
            for (std::size_t i = 0; i < cell.size(); ++i) {
                if (taken[i] || w[i] <= 0.0) continue;
                pick = i;
                r -= w[i];
                if (r < 0.0) break;
            }
        } else {
            std::size_t left = cell.size() - out.size();
            std::size_t r = std::uniform_int_distribution<std::size_t>(0, left - 1)(rng);
            for (std::size_t i = 0; i < cell.size(); ++i) {
                if (taken[i]) continue;
                if (r-- == 0) {
                    pick = i;
                    break;
                }
            }
        }
        taken[pick] = 1;
        out.push_back(cell[pick]);
    }
    return out;
}

}  // namespace

std::vector<Index> select_vertices(SamplerKind strategy, const Partition& partition, std::size_t quota,
                                   const LabelState& state, const SamplerInputs& inputs, std::mt19937_64& rng) {
    if (quota == 0) throw Error("per-cell quota must be at least 1");
    if (strategy == SamplerKind::FeatProp) throw Error("featprop selects through featprop_select");
    std::vector<std::vector<Index>> cells(partition.num_cells);
    for (std::size_t v = 0; v < partition.cell.size(); ++v) {
        const int c = partition.cell[v];
        if (c >= 0 && state.in_pool(static_cast<Index>(v))) cells[static_cast<std::size_t>(c)].push_back(static_cast<Index>(v));
    }

    std::vector<Index> out;
    for (const auto& cell : cells) {
        if (cell.empty()) continue;
        if (cell.size() <= quota) {
            out.insert(out.end(), cell.begin(), cell.end());
            continue;
        }
        std::vector<Index> picked;
        switch (strategy) {
            case SamplerKind::Random: {
                std::vector<Index> shuffled = cell;
                for (std::size_t i = 0; i < quota; ++i) {
                    std::size_t j = std::uniform_int_distribution<std::size_t>(i, shuffled.size() - 1)(rng);
                    std::swap(shuffled[i], shuffled[j]);
                }
                picked.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(quota));
                break;
            }
            case SamplerKind::Entropy: {
                if (!inputs.logits) throw Error("entropy sampling needs logits");
                std::vector<double> w;
                for (Index v : cell) w.push_back(row_entropy(inputs.logits->row(static_cast<std::size_t>(v))));
                picked = weighted_draws(cell, std::move(w), quota, rng);
                break;
            }
            case SamplerKind::PageRank: {
                if (!inputs.pagerank) throw Error("pagerank sampling needs scores");
                std::vector<double> w;
                for (Index v : cell) w.push_back(inputs.pagerank->scores.at(static_cast<std::size_t>(v)));
                picked = weighted_draws(cell, std::move(w), quota, rng);
                break;
            }
            case SamplerKind::Medoid: {
                if (!inputs.space) throw Error("medoid sampling needs a clustering space");
                const Clustering c = kmedoids(select_rows(*inputs.space, cell), quota, rng());
                for (Index m : c.medoids) picked.push_back(cell[static_cast<std::size_t>(m)]);
                break;
            }
            case SamplerKind::FeatProp: break;
        }
        out.insert(out.end(), picked.begin(), picked.end());
    }
    return out;
}

std::vector<Index> featprop_select(const Graph& g, std::size_t budget, std::size_t hops, std::uint64_t seed,
                                   const std::vector<Index>& candidates) {
    std::vector<Index> members = candidates;
    if (members.empty()) {
        members.resize(g.num_vertices());
        std::iota(members.begin(), members.end(), 0);
    }
    if (budget > members.size()) throw Error("featprop budget exceeds the number of candidates");
    if (budget == 0) return {};
    const DenseMatrix feats =
        propagate_features(normalize_adjacency(g, AdjacencyMode::SelfLoopSymmetric), g.features(), hops);
    const Clustering c = kmedoids(select_rows(feats, members), budget, seed);
    std::vector<Index> out;
    out.reserve(budget);
    for (Index m : c.medoids) out.push_back(members[static_cast<std::size_t>(m)]);
    return out;
}

Annotator Annotator::noisy(double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon must lie in [0, 1]");
    Annotator a;
    a.kind = Kind::Noisy;
    a.epsilon = epsilon;
    return a;
}

Annotator Annotator::interactive(Channel channel) {
    Annotator a;
    a.kind = Kind::Interactive;
    a.channel = std::move(channel);
    return a;
}

std::vector<int> annotate(const Annotator& a, const std::vector<Index>& vertices, const Graph& g,
                          std::mt19937_64& rng) {
    if (a.kind == Annotator::Kind::Interactive) {
        if (!a.channel) throw SessionAborted("no interactive session attached");
        std::vector<int> labels = a.channel(vertices);
        if (labels.size() != vertices.size()) throw ValidationError("interactive annotator returned the wrong count");
        return labels;
    }
    if (!g.has_labels()) throw ValidationError("oracle and noisy annotators need ground-truth labels");
    std::vector<int> out;
    out.reserve(vertices.size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int classes = static_cast<int>(g.num_classes());
    for (Index v : vertices) {
        const int truth = g.labels().at(static_cast<std::size_t>(v));
        if (a.kind == Annotator::Kind::Noisy && classes > 1 && unit(rng) < a.epsilon) {
            int wrong = std::uniform_int_distribution<int>(0, classes - 2)(rng);
            if (wrong >= truth) ++wrong;
            out.push_back(wrong);
        } else {
            out.push_back(truth);
        }
    }
    return out;
}

}  // namespace coldstart
