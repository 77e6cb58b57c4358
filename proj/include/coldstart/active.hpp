#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string_view>
#include <vector>

#include "coldstart/graph.hpp"
#include "coldstart/matrix.hpp"
#include "coldstart/models.hpp"
#include "coldstart/propagation.hpp"

namespace coldstart {

enum class Setting { Balanced, Unbalanced, UnknownK };
enum class SamplerKind { Random, Entropy, PageRank, Medoid, FeatProp };

std::string_view to_string(Setting s);
std::string_view to_string(SamplerKind s);
Setting parse_setting(std::string_view name);
SamplerKind parse_sampler(std::string_view name);

/// Human labels, the unlabeled pool and the budget of one run.
class LabelState {
public:
    /// `eligible` marks vertices that may ever be queried (the non-test vertices).
    LabelState(std::vector<char> eligible, std::size_t budget_total);

    std::size_t num_vertices() const noexcept { return human_.size(); }
    std::size_t budget_total() const noexcept { return budget_total_; }
    std::size_t budget_used() const noexcept { return order_.size(); }
    std::size_t budget_left() const noexcept { return budget_total_ - order_.size(); }

    bool in_pool(Index v) const { return pool_[static_cast<std::size_t>(v)] != 0; }
    bool is_eligible(Index v) const { return eligible_[static_cast<std::size_t>(v)] != 0; }
    /// -1 when v has no human label.
    int human_label(Index v) const { return human_[static_cast<std::size_t>(v)]; }
    const std::vector<char>& pool() const noexcept { return pool_; }
    const std::vector<char>& eligible() const noexcept { return eligible_; }
    /// Annotated vertices in annotation order.
    const std::vector<Index>& annotated() const noexcept { return order_; }
    std::size_t pool_size() const noexcept { return pool_count_; }

    /// Moves v from the pool into the human-labeled set. Throws when v is not in
    /// the pool or the budget is exhausted.
    void add_human(Index v, int label);

    void set_pseudo(std::vector<LabeledVertex> pseudo);
    const std::vector<LabeledVertex>& pseudo() const noexcept { return pseudo_; }

    /// Human labels followed by pseudo-labels.
    std::vector<LabeledVertex> training_set() const;

private:
    std::vector<char> eligible_;
    std::vector<char> pool_;
    std::vector<int> human_;
    std::vector<Index> order_;
    std::vector<LabeledVertex> pseudo_;
    std::size_t budget_total_;
    std::size_t pool_count_ = 0;
};

struct Partition {
    /// Cell of every eligible vertex; -1 elsewhere.
    std::vector<int> cell;
    std::size_t num_cells = 0;
    /// k was reduced to the number of unlabeled vertices.
    bool clipped = false;
};

/// Balanced: the true classes. Otherwise k-medoids with k cells over the rows of
/// `space` for the eligible vertices.
Partition partition_vertices(Setting setting, const Graph& g, const DenseMatrix& space, const LabelState& state,
                             std::size_t k, std::uint64_t seed);

/// Shannon entropy (natural log) of a nonnegative row after normalization;
/// ln(cols) for a zero-mass row.
double row_entropy(std::span<const double> row);

struct SamplerInputs {
    const DenseMatrix* logits = nullptr;  // entropy weights
    const DenseMatrix* space = nullptr;   // medoid clustering space
    const PageRankScores* pagerank = nullptr;
};

/// Per cell, up to `quota` pool vertices. Cells without pool vertices forfeit
/// their quota. Output is grouped by cell in cell order.
std::vector<Index> select_vertices(SamplerKind strategy, const Partition& partition, std::size_t quota,
                                   const LabelState& state, const SamplerInputs& inputs, std::mt19937_64& rng);

/// k-medoids with k = budget over hop-propagated features of the candidates
/// (all vertices when empty). Returns the medoids.
std::vector<Index> featprop_select(const Graph& g, std::size_t budget, std::size_t hops, std::uint64_t seed,
                                   const std::vector<Index>& candidates = {});

struct Annotator {
    enum class Kind { Oracle, Noisy, Interactive };
    using Channel = std::function<std::vector<int>(const std::vector<Index>&)>;

    Kind kind = Kind::Oracle;
    double epsilon = 0.0;
    /// Blocks until labels for exactly the given vertices are available.
    Channel channel;

    static Annotator oracle() { return {}; }
    static Annotator noisy(double epsilon);
    static Annotator interactive(Channel channel);
};

/// Labels for `vertices`. Noisy annotators replace the true label, with
/// probability epsilon, by a uniformly drawn different class.
std::vector<int> annotate(const Annotator& a, const std::vector<Index>& vertices, const Graph& g,
                          std::mt19937_64& rng);

}  // namespace coldstart
