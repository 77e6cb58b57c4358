#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "coldstart/matrix.hpp"

namespace coldstart {

/// Reverse-mode gradient tape over the handful of matrix primitives the graph
/// models need. Every primitive appends one node; backward() walks the nodes
/// in exact reverse creation order and accumulates gradients additively.
///
/// Every forward value and every propagated gradient is checked for NaN/Inf;
/// a failure raises NumericError naming the primitive.
///
/// Sparse operators passed to spmm() are held by reference and must outlive
/// the call to backward().
class Tape {
public:
    struct Var {
        std::size_t id = std::numeric_limits<std::size_t>::max();
    };

    Var constant(DenseMatrix value);
    /// A leaf whose gradient is tracked.
    Var parameter(DenseMatrix value);

    const DenseMatrix& value(Var v) const;
    /// Gradient of the last backward() target with respect to v; zeros if v
    /// did not influence it.
    DenseMatrix grad(Var v) const;
    double scalar(Var v) const;

    std::size_t size() const noexcept { return nodes_.size(); }
    /// Primitive names in creation order.
    std::vector<std::string_view> trace() const;

    /// Seeds d(target)/d(target) = 1 and propagates. Target must be 1x1.
    void backward(Var target);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scale(Var a, double s);
    Var add_scalar(Var a, double s);
    Var matmul(Var a, Var b);
    /// a * b^T
    Var matmul_bt(Var a, Var b);
    /// Constant sparse operator applied on the left.
    Var spmm(const CsrMatrix& op, Var x);
    Var relu(Var a);
    /// Inverted dropout: zeroes entries with probability p, scales survivors by 1/(1-p).
    Var dropout(Var a, double p, std::mt19937_64& rng);
    Var row_softmax(Var a);
    Var row_log_softmax(Var a);
    Var exp(Var a);
    Var log(Var a);
    Var select_rows(Var a, std::vector<Index> rows);
    /// Matrix of Euclidean distances between rows of a and rows of b.
    /// The subgradient at zero distance is taken as zero.
    Var pairwise_distance(Var a, Var b);
    /// 1 x cols mean over rows.
    Var column_mean(Var a);
    /// a minus a broadcast 1 x cols row.
    Var sub_row(Var a, Var row);
    /// Scales every row to unit length; zero rows map to zero with zero gradient.
    Var row_normalize(Var a);
    /// rows x 1 maximum over the entries with mask[r * cols + c] != 0. Rows with
    /// no eligible entry produce 0. Ties route the gradient to the first maximum.
    Var masked_row_max(Var a, std::vector<char> mask);
    /// 1x1 mean of all entries.
    Var mean(Var a);
    /// 1x1 sum of all entries.
    Var sum(Var a);
    /// 1x1 negative mean of log-probabilities picked at (i, targets[i]).
    Var nll(Var log_probs, std::vector<int> targets);
    /// Softmax cross-entropy, averaged over rows.
    Var cross_entropy(Var logits, std::vector<int> targets);

private:
    struct Node {
        DenseMatrix value;
        DenseMatrix grad;
        bool tracked = false;
        std::string_view op;
        std::function<void(Tape&, const Node&)> backward;
    };

    Var push(std::string_view op, DenseMatrix value, std::initializer_list<Var> inputs,
             std::function<void(Tape&, const Node&)> backward);
    bool tracked(Var v) const { return nodes_[v.id].tracked; }
    /// Gradient buffer of v, allocated on first use.
    DenseMatrix& accum(Var v);
    void check_var(Var v) const;

    std::vector<Node> nodes_;
};

struct AdamConfig {
    double lr = 0.005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// L2 penalty folded into the gradient before the moment update.
    double weight_decay = 0.0;
};

struct AdamState {
    DenseMatrix m;
    DenseMatrix v;
    long long t = 0;
};

/// One bias-corrected Adam update of param in place.
void adam_step(DenseMatrix& param, const DenseMatrix& grad, AdamState& state, const AdamConfig& cfg);

}  // namespace coldstart
