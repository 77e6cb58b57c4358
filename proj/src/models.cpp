#include "coldstart/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "coldstart/error.hpp"

namespace coldstart {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Gcn: return "gcn";
        case ModelKind::Gpn: return "gpn";
        case ModelKind::Lp: return "lp";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name) {
    if (name == "gcn") return ModelKind::Gcn;
    if (name == "gpn") return ModelKind::Gpn;
    if (name == "lp") return ModelKind::Lp;
    throw Error("unknown model '" + std::string(name) + "' (expected gcn, gpn or lp)");
}

GcnParams GcnParams::glorot(std::size_t in_dim, std::size_t hidden, std::size_t out_dim, std::mt19937_64& rng) {
    auto init = [&rng](std::size_t rows, std::size_t cols) {
        const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> u(-a, a);
        DenseMatrix m(rows, cols);
        for (double& x : m.data()) x = u(rng);
        return m;
    };
    GcnParams p;
    p.w0 = init(in_dim, hidden);
    p.w1 = init(hidden, out_dim);
    return p;
}

GcnInputs GcnInputs::build(const Graph& g) {
    return build(normalize_adjacency(g, AdjacencyMode::SelfLoopSymmetric), g.features());
}

GcnInputs GcnInputs::build(const NormalizedAdjacency& adj, const DenseMatrix& x) {
    if (adj.mode != AdjacencyMode::SelfLoopSymmetric) throw Error("GCN inputs need the self-loop operator");
    GcnInputs in;
    in.adj = adj;
    in.x = CsrMatrix::from_dense(x);
    return in;
}

DenseMatrix gcn_forward(const GcnInputs& in, const GcnParams& p) {
    if (in.x.cols != p.w0.rows()) throw DimensionError("gcn_forward: feature dimension does not match W0");
    DenseMatrix h = spmm(in.adj.matrix, spmm(in.x, p.w0));
    for (double& x : h.data()) x = std::max(x, 0.0);
    return spmm(in.adj.matrix, matmul(h, p.w1));
}

Tape::Var gcn_forward(Tape& tape, const GcnInputs& in, Tape::Var w0, Tape::Var w1, double dropout,
                      std::mt19937_64* rng) {
    Tape::Var h = tape.relu(tape.spmm(in.adj.matrix, tape.spmm(in.x, w0)));
    if (rng && dropout > 0.0) h = tape.dropout(h, dropout, *rng);
    return tape.spmm(in.adj.matrix, tape.matmul(h, w1));
}

std::vector<int> ModelOutput::predictions() const {
    std::vector<int> out(logits.rows());
    for (std::size_t v = 0; v < logits.rows(); ++v) out[v] = static_cast<int>(argmax(logits.row(v)));
    return out;
}

DenseMatrix discriminative_logits(const DenseMatrix& embeddings) { return row_softmax(embeddings); }

std::size_t Prototypes::num_covered() const {
    return static_cast<std::size_t>(std::count(covered.begin(), covered.end(), 1));
}

std::vector<std::vector<double>> prototype_weights(const std::vector<std::vector<Index>>& class_sets,
                                                   const PageRankScores& pr) {
    std::vector<std::vector<double>> out(class_sets.size());
    for (std::size_t c = 0; c < class_sets.size(); ++c) {
        const auto& members = class_sets[c];
        double total = 0.0;
        for (Index v : members) total += pr.scores.at(static_cast<std::size_t>(v));
        out[c].reserve(members.size());
        for (Index v : members) {
            const double s = pr.scores[static_cast<std::size_t>(v)];
            out[c].push_back(total > 0.0 ? s / total : 1.0 / static_cast<double>(members.size()));
        }
    }
    return out;
}

Prototypes compute_prototypes(const DenseMatrix& embeddings, const std::vector<std::vector<Index>>& class_sets,
                              const PageRankScores& pr) {
    const std::size_t dim = embeddings.cols();
    Prototypes p;
    p.centers = DenseMatrix(class_sets.size(), dim);
    p.covered.assign(class_sets.size(), 0);
    p.mean = DenseMatrix(1, dim);
    const auto weights = prototype_weights(class_sets, pr);
    for (std::size_t c = 0; c < class_sets.size(); ++c) {
        if (class_sets[c].empty()) continue;
        p.covered[c] = 1;
        auto dst = p.centers.row(c);
        for (std::size_t i = 0; i < class_sets[c].size(); ++i) {
            auto h = embeddings.row(static_cast<std::size_t>(class_sets[c][i]));
            for (std::size_t j = 0; j < dim; ++j) dst[j] += weights[c][i] * h[j];
        }
    }
    const std::size_t covered = p.num_covered();
    if (covered == 0) throw Error("no class has a labeled vertex; prototypes are undefined");
    for (std::size_t c = 0; c < class_sets.size(); ++c) {
        if (!p.covered[c]) continue;
        for (std::size_t j = 0; j < dim; ++j) p.mean(0, j) += p.centers(c, j);
    }
    for (double& x : p.mean.data()) x /= static_cast<double>(covered);
    return p;
}

DenseMatrix prototype_logits(const DenseMatrix& embeddings, const Prototypes& protos) {
    if (embeddings.cols() != protos.centers.cols()) throw DimensionError("prototype_logits: dimension mismatch");
    const std::size_t classes = protos.centers.rows();
    DenseMatrix out(embeddings.rows(), classes);
    std::vector<double> neg(classes);
    for (std::size_t v = 0; v < embeddings.rows(); ++v) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < classes; ++c) {
            if (!protos.covered[c]) continue;
            neg[c] = -euclidean_distance(embeddings.row(v), protos.centers.row(c));
            mx = std::max(mx, neg[c]);
        }
        double total = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            if (!protos.covered[c]) continue;
            out(v, c) = std::exp(neg[c] - mx);
            total += out(v, c);
        }
        for (std::size_t c = 0; c < classes; ++c) out(v, c) /= total;
    }
    return out;
}

PrototypeLoss prototypical_loss(Tape& tape, Tape::Var embeddings, const PrototypeTask& task,
                                const PageRankScores& pr, double lambda) {
    std::vector<int> slot(task.class_sets.size(), -1);
    std::vector<Index> support;
    std::size_t covered = 0;
    for (std::size_t c = 0; c < task.class_sets.size(); ++c) {
        if (task.class_sets[c].empty()) continue;
        slot[c] = static_cast<int>(covered++);
        support.insert(support.end(), task.class_sets[c].begin(), task.class_sets[c].end());
    }
    if (covered == 0) throw Error("prototypical loss needs at least one covered class");

    const auto weights = prototype_weights(task.class_sets, pr);
    DenseMatrix mix(covered, support.size());
    std::size_t col = 0;
    for (std::size_t c = 0; c < task.class_sets.size(); ++c) {
        for (double w : weights[c]) mix(static_cast<std::size_t>(slot[c]), col++) = w;
    }
    Tape::Var protos = tape.matmul(tape.constant(std::move(mix)), tape.select_rows(embeddings, support));

    std::vector<Index> query;
    std::vector<int> targets;
    for (std::size_t i = 0; i < task.query.size(); ++i) {
        const int l = task.query_labels.at(i);
        if (l < 0 || static_cast<std::size_t>(l) >= slot.size() || slot[l] < 0) continue;
        query.push_back(task.query[i]);
        targets.push_back(slot[l]);
    }

    PrototypeLoss out;
    if (query.empty()) {
        out.lp = tape.constant(DenseMatrix(1, 1));
    } else {
        Tape::Var dist = tape.pairwise_distance(tape.select_rows(embeddings, std::move(query)), protos);
        out.lp = tape.nll(tape.row_log_softmax(tape.scale(dist, -1.0)), std::move(targets));
    }

    if (covered < 2) {
        out.le = tape.constant(DenseMatrix(1, 1));
        out.lc = tape.constant(DenseMatrix(1, 1));
        out.total = out.lp;
        return out;
    }
    std::vector<char> off_diagonal(covered * covered, 1);
    for (std::size_t c = 0; c < covered; ++c) off_diagonal[c * covered + c] = 0;

    Tape::Var closeness = tape.exp(tape.scale(tape.pairwise_distance(protos, protos), -1.0));
    out.le = tape.mean(tape.masked_row_max(closeness, off_diagonal));

    Tape::Var dirs = tape.row_normalize(tape.sub_row(protos, tape.column_mean(protos)));
    Tape::Var cosine = tape.matmul_bt(dirs, dirs);
    out.lc = tape.add_scalar(tape.mean(tape.masked_row_max(cosine, std::move(off_diagonal))), 1.0);

    out.total = tape.add(out.lp, tape.scale(tape.add(out.le, out.lc), lambda));
    out.regularized = true;
    return out;
}

Tape::Var discriminative_loss(Tape& tape, Tape::Var embeddings, const std::vector<Index>& vertices,
                              const std::vector<int>& labels) {
    return tape.cross_entropy(tape.select_rows(embeddings, vertices), labels);
}

ModelContext ModelContext::build(const Graph& g, std::size_t num_classes, double damping) {
    ModelContext ctx;
    ctx.graph = &g;
    ctx.gcn = GcnInputs::build(g);
    ctx.plain = normalize_adjacency(g, AdjacencyMode::PlainSymmetric);
    ctx.pagerank = coldstart::pagerank(g, damping);
    ctx.num_classes = num_classes;
    return ctx;
}

void split_train_validation(const std::vector<LabeledVertex>& labeled, std::mt19937_64& rng,
                            std::vector<LabeledVertex>& train, std::vector<LabeledVertex>& validation) {
    train.clear();
    validation.clear();
    if (labeled.size() < 8) {
        train = labeled;
        validation = labeled;
        return;
    }
    int max_label = 0;
    for (const auto& lv : labeled) max_label = std::max(max_label, lv.label);
    std::vector<char> held_out(labeled.size(), 0);
    for (int c = 0; c <= max_label; ++c) {
        std::vector<std::size_t> pseudo;
        std::vector<std::size_t> human;
        for (std::size_t i = 0; i < labeled.size(); ++i) {
            if (labeled[i].label != c) continue;
            (labeled[i].human ? human : pseudo).push_back(i);
        }
        std::shuffle(pseudo.begin(), pseudo.end(), rng);
        std::shuffle(human.begin(), human.end(), rng);
        std::size_t quota = (pseudo.size() + human.size()) / 4;
        for (std::size_t i : pseudo) {
            if (quota == 0) break;
            held_out[i] = 1;
            --quota;
        }
        for (std::size_t i : human) {
            if (quota == 0) break;
            held_out[i] = 1;
            --quota;
        }
    }
    for (std::size_t i = 0; i < labeled.size(); ++i) (held_out[i] ? validation : train).push_back(labeled[i]);
    if (validation.empty()) validation = train;
}

namespace {

std::vector<std::vector<Index>> class_sets_of(const std::vector<LabeledVertex>& labeled, std::size_t classes,
                                              bool with_pseudo) {
    std::vector<std::vector<Index>> sets(classes);
    for (const auto& lv : labeled) {
        if (!lv.human && !with_pseudo) continue;
        if (lv.label >= 0 && static_cast<std::size_t>(lv.label) < classes) sets[lv.label].push_back(lv.vertex);
    }
    return sets;
}

DenseMatrix lp_logits(const ModelContext& ctx, const std::vector<LabeledVertex>& labeled, const HyperParams& h,
                      std::vector<char>& covered) {
    DenseMatrix seeds(ctx.graph->num_vertices(), ctx.num_classes);
    covered.assign(ctx.num_classes, 0);
    for (const auto& lv : labeled) {
        if (!lv.human) continue;
        seeds(static_cast<std::size_t>(lv.vertex), static_cast<std::size_t>(lv.label)) = 1.0;
        covered[static_cast<std::size_t>(lv.label)] = 1;
    }
    return label_propagate(ctx.plain, seeds, h.alpha, h.lp_hops);
}

struct Evaluation {
    double accuracy = 0.0;
    double loss = 0.0;
};

Evaluation evaluate(const DenseMatrix& logits, const std::vector<LabeledVertex>& vertices) {
    Evaluation e;
    if (vertices.empty()) return e;
    std::size_t correct = 0;
    for (const auto& lv : vertices) {
        auto row = logits.row(static_cast<std::size_t>(lv.vertex));
        if (static_cast<int>(argmax(row)) == lv.label) ++correct;
        e.loss -= std::log(std::max(row[static_cast<std::size_t>(lv.label)], 1e-300));
    }
    e.accuracy = static_cast<double>(correct) / static_cast<double>(vertices.size());
    e.loss /= static_cast<double>(vertices.size());
    return e;
}

}  // namespace

ModelOutput untrained_output(ModelKind kind, const ModelContext& ctx, const GcnParams& params) {
    ModelOutput out;
    out.covered.assign(ctx.num_classes, 0);
    if (kind == ModelKind::Lp) {
        out.logits = DenseMatrix(ctx.graph->num_vertices(), ctx.num_classes);
        out.embeddings = out.logits;
        return out;
    }
    out.embeddings = gcn_forward(ctx.gcn, params);
    out.logits = discriminative_logits(out.embeddings);
    return out;
}

TrainResult train_model(ModelKind kind, const ModelContext& ctx, const std::vector<LabeledVertex>& labeled,
                        const HyperParams& hyper, GcnParams& params, std::uint64_t seed) {
    if (std::none_of(labeled.begin(), labeled.end(), [](const LabeledVertex& lv) { return lv.human; })) {
        throw Error("train_model needs at least one human-labeled vertex");
    }
    for (const auto& lv : labeled) {
        if (lv.label < 0 || static_cast<std::size_t>(lv.label) >= ctx.num_classes) {
            throw ValidationError("training label " + std::to_string(lv.label) + " exceeds the model width");
        }
    }
    TrainResult result;
    if (kind == ModelKind::Lp) {
        result.output.logits = lp_logits(ctx, labeled, hyper, result.output.covered);
        result.output.embeddings = result.output.logits;
        return result;
    }

    std::mt19937_64 rng(seed);
    std::vector<LabeledVertex> train, validation;
    split_train_validation(labeled, rng, train, validation);

    const bool proto = kind == ModelKind::Gpn;
    PrototypeTask task;
    std::vector<Index> train_vertices;
    std::vector<int> train_labels;
    for (const auto& lv : train) {
        train_vertices.push_back(lv.vertex);
        train_labels.push_back(lv.label);
    }
    if (proto) {
        task.class_sets = class_sets_of(train, ctx.num_classes, hyper.pseudo_in_prototypes);
        task.query = train_vertices;
        task.query_labels = train_labels;
        std::size_t covered = 0;
        for (const auto& s : task.class_sets) covered += s.empty() ? 0 : 1;
        result.regularizers_disabled = covered < 2;
    }

    auto logits_of = [&](const GcnParams& p) {
        DenseMatrix emb = gcn_forward(ctx.gcn, p);
        if (!proto) return discriminative_logits(emb);
        return prototype_logits(emb, compute_prototypes(emb, task.class_sets, ctx.pagerank));
    };

    AdamConfig adam;
    adam.lr = hyper.lr;
    adam.weight_decay = hyper.weight_decay;

    GcnParams best = params;
    Evaluation best_eval = evaluate(logits_of(params), validation);
    std::size_t stale = 0;
    for (std::size_t epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
        Tape tape;
        Tape::Var w0 = tape.parameter(params.w0);
        Tape::Var w1 = tape.parameter(params.w1);
        Tape::Var emb = gcn_forward(tape, ctx.gcn, w0, w1, hyper.dropout, &rng);
        Tape::Var loss = proto ? prototypical_loss(tape, emb, task, ctx.pagerank, hyper.lambda).total
                               : discriminative_loss(tape, emb, train_vertices, train_labels);
        tape.backward(loss);
        adam_step(params.w0, tape.grad(w0), params.adam0, adam);
        adam_step(params.w1, tape.grad(w1), params.adam1, adam);
        result.epochs = epoch;

        const Evaluation e = evaluate(logits_of(params), validation);
        if (e.accuracy > best_eval.accuracy || (e.accuracy == best_eval.accuracy && e.loss < best_eval.loss)) {
            best_eval = e;
            best = params;
            stale = 0;
        } else if (++stale >= hyper.patience) {
            break;
        }
    }
    params = std::move(best);
    result.best_validation_accuracy = best_eval.accuracy;

    result.output.embeddings = gcn_forward(ctx.gcn, params);
    if (proto) {
        const Prototypes p = compute_prototypes(result.output.embeddings,
                                                class_sets_of(labeled, ctx.num_classes, hyper.pseudo_in_prototypes),
                                                ctx.pagerank);
        result.output.logits = prototype_logits(result.output.embeddings, p);
        result.output.covered = p.covered;
    } else {
        result.output.logits = discriminative_logits(result.output.embeddings);
        result.output.covered.assign(ctx.num_classes, 0);
        for (const auto& lv : labeled) result.output.covered[static_cast<std::size_t>(lv.label)] = 1;
    }
    return result;
}

}  // namespace coldstart
