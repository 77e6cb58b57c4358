#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "coldstart/graph.hpp"
#include "coldstart/matrix.hpp"
#include "coldstart/propagation.hpp"
#include "coldstart/tape.hpp"

namespace coldstart {

enum class ModelKind { Gcn, Gpn, Lp };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct HyperParams {
    double alpha = 0.9;
    double entropy_threshold = 0.2;
    double lambda = 1.0;
    double lr = 0.005;
    double weight_decay = 5e-4;
    std::size_t hidden = 64;
    double dropout = 0.5;
    std::size_t lp_hops = 3;
    double damping = 0.85;
    std::size_t max_epochs = 200;
    std::size_t patience = 4;
    /// Let pseudo-labeled vertices contribute to the prototypes, not only the loss.
    bool pseudo_in_prototypes = false;
};

struct GcnParams {
    DenseMatrix w0;  // feature_dim x hidden
    DenseMatrix w1;  // hidden x out_dim
    AdamState adam0;
    AdamState adam1;

    /// Glorot-uniform initialization.
    static GcnParams glorot(std::size_t in_dim, std::size_t hidden, std::size_t out_dim, std::mt19937_64& rng);
};

/// Operators shared by every forward pass over one graph: the self-loop
/// normalized adjacency and the features in sparse form.
struct GcnInputs {
    NormalizedAdjacency adj;
    /// Sparse features; A X W0 is evaluated as A (X W0).
    CsrMatrix x;

    static GcnInputs build(const Graph& g);
    static GcnInputs build(const NormalizedAdjacency& adj, const DenseMatrix& x);
};

/// A * relu(A X W0) * W1 without dropout.
DenseMatrix gcn_forward(const GcnInputs& in, const GcnParams& p);

/// Tape version. Dropout after the relu is applied when rng is non-null.
Tape::Var gcn_forward(Tape& tape, const GcnInputs& in, Tape::Var w0, Tape::Var w1, double dropout,
                      std::mt19937_64* rng);

struct ModelOutput {
    DenseMatrix embeddings;
    DenseMatrix logits;
    /// Classes with at least one prototype member (prototypical head only).
    std::vector<char> covered;

    std::vector<int> predictions() const;
};

/// Row softmax of the embeddings.
DenseMatrix discriminative_logits(const DenseMatrix& embeddings);

struct Prototypes {
    DenseMatrix centers;  // num_classes x dim; rows of uncovered classes are zero
    std::vector<char> covered;
    DenseMatrix mean;     // 1 x dim, over covered classes

    std::size_t num_covered() const;
};

/// Weights of class members: PageRank renormalized to sum to one within each class.
std::vector<std::vector<double>> prototype_weights(const std::vector<std::vector<Index>>& class_sets,
                                                   const PageRankScores& pr);

/// class_sets[c] lists the labeled members of class c. Throws when no class is covered.
Prototypes compute_prototypes(const DenseMatrix& embeddings, const std::vector<std::vector<Index>>& class_sets,
                              const PageRankScores& pr);

/// Softmax over negated distances to covered prototypes; uncovered columns are 0.
DenseMatrix prototype_logits(const DenseMatrix& embeddings, const Prototypes& protos);

struct PrototypeLoss {
    Tape::Var total;
    Tape::Var lp;
    Tape::Var le;
    Tape::Var lc;
    bool regularized = false;  // false when fewer than two classes are covered
};

/// Supervision for the prototypical loss. Prototype members and query vertices
/// are given separately; query labels of uncovered classes are ignored.
struct PrototypeTask {
    std::vector<std::vector<Index>> class_sets;
    std::vector<Index> query;
    std::vector<int> query_labels;
};

/// L = L_p + lambda * (L_e + L_c) over covered classes.
PrototypeLoss prototypical_loss(Tape& tape, Tape::Var embeddings, const PrototypeTask& task,
                                const PageRankScores& pr, double lambda);

/// Mean softmax cross-entropy at the given vertices.
Tape::Var discriminative_loss(Tape& tape, Tape::Var embeddings, const std::vector<Index>& vertices,
                              const std::vector<int>& labels);

/// A labeled training vertex; `human` is false for propagated pseudo-labels.
struct LabeledVertex {
    Index vertex;
    int label;
    bool human;
};

struct ModelContext {
    const Graph* graph = nullptr;
    GcnInputs gcn;
    NormalizedAdjacency plain;
    PageRankScores pagerank;
    std::size_t num_classes = 0;

    static ModelContext build(const Graph& g, std::size_t num_classes, double damping = 0.85);
};

struct TrainResult {
    ModelOutput output;
    std::size_t epochs = 0;
    double best_validation_accuracy = 0.0;
    bool regularizers_disabled = false;
};

/// Splits labeled vertices into train and validation: per class, floor(25%)
/// go to validation, pseudo-labels first. Below 8 vertices, or when no class
/// has 4 members, validation equals the training set.
void split_train_validation(const std::vector<LabeledVertex>& labeled, std::mt19937_64& rng,
                            std::vector<LabeledVertex>& train, std::vector<LabeledVertex>& validation);

/// Output of a model without any supervision.
ModelOutput untrained_output(ModelKind kind, const ModelContext& ctx, const GcnParams& params);

/// Trains `params` in place (warm start) and returns the output of the best
/// validation checkpoint. kind == Lp ignores params and propagates the human labels.
TrainResult train_model(ModelKind kind, const ModelContext& ctx, const std::vector<LabeledVertex>& labeled,
                        const HyperParams& hyper, GcnParams& params, std::uint64_t seed);

}  // namespace coldstart
