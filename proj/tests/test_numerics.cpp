#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "coldstart/error.hpp"
#include "coldstart/graph.hpp"
#include "coldstart/matrix.hpp"
#include "coldstart/tape.hpp"
#include "support.hpp"

using namespace coldstart;
using Builder = std::function<Tape::Var(Tape&, Tape::Var)>;

namespace {

// Analytic gradient of the scalar built by `f` against central differences.
double gradient_error(const Builder& f, const DenseMatrix& x0) {
    Tape tape;
    const Tape::Var p = tape.parameter(x0);
    const Tape::Var out = f(tape, p);
    tape.backward(out);
    const DenseMatrix analytic = tape.grad(p);
    const DenseMatrix numeric = testing::numeric_gradient(
        [&](const DenseMatrix& x) {
            Tape t;
            return t.scalar(f(t, t.parameter(x)));
        },
        x0);
    return testing::relative_error(analytic, numeric);
}

}  // namespace

TEST_CASE("dense kernels agree with naive loops") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 1 + rng() % 7, k = 1 + rng() % 7, m = 1 + rng() % 7;
        const DenseMatrix a = testing::random_matrix(n, k, rng);
        const DenseMatrix b = testing::random_matrix(k, m, rng);
        const DenseMatrix ref = testing::naive_matmul(a, b);
        CHECK(testing::max_abs_diff(matmul(a, b), ref) < 1e-13);
        CHECK(testing::max_abs_diff(matmul_at(transpose(a), b), ref) < 1e-13);
        CHECK(testing::max_abs_diff(matmul_bt(a, transpose(b)), ref) < 1e-13);
        const CsrMatrix s = CsrMatrix::from_dense(a);
        CHECK(testing::max_abs_diff(spmm(s, b), ref) < 1e-13);
        const DenseMatrix y = testing::random_matrix(n, m, rng);
        CHECK(testing::max_abs_diff(spmm_transposed(s, y), testing::naive_matmul(transpose(a), y)) < 1e-13);
    }
    CHECK_THROWS_AS(matmul(DenseMatrix(2, 3), DenseMatrix(2, 3)), DimensionError);
}

TEST_CASE("spmm on normalized adjacency") {
    SUBCASE("two vertices, one edge") {
        const auto a = normalize_adjacency(testing::path_graph(2), AdjacencyMode::PlainSymmetric);
        const DenseMatrix y = spmm(a, DenseMatrix{{1, 0}, {0, 0}});
        CHECK(y == DenseMatrix{{0, 0}, {1, 0}});
    }
    SUBCASE("self-loop-only operator is the identity") {
        const Graph g = Graph::from_edges(3, {}, DenseMatrix(3, 1));
        const auto a = normalize_adjacency(g, AdjacencyMode::SelfLoopSymmetric);
        const DenseMatrix x{{1, 2}, {3, 4}, {5, 6}};
        CHECK(spmm(a, x) == x);
        CHECK(spmm(a, DenseMatrix(3, 2)) == DenseMatrix(3, 2));
    }
    SUBCASE("linearity") {
        std::mt19937_64 rng(4);
        for (int t = 0; t < 30; ++t) {
            const Graph g = testing::random_graph(2 + rng() % 10, 0.4, rng);
            const auto a = normalize_adjacency(g, AdjacencyMode::PlainSymmetric);
            const DenseMatrix x = testing::random_matrix(g.num_vertices(), 3, rng);
            const DenseMatrix y = testing::random_matrix(g.num_vertices(), 3, rng);
            const double alpha = 0.7, beta = -1.3;
            DenseMatrix combo(x.rows(), x.cols());
            for (std::size_t i = 0; i < combo.size(); ++i) combo.data()[i] = alpha * x.data()[i] + beta * y.data()[i];
            const DenseMatrix lhs = spmm(a, combo);
            const DenseMatrix sx = spmm(a, x), sy = spmm(a, y);
            DenseMatrix rhs(x.rows(), x.cols());
            for (std::size_t i = 0; i < rhs.size(); ++i) rhs.data()[i] = alpha * sx.data()[i] + beta * sy.data()[i];
            CHECK(testing::max_abs_diff(lhs, rhs) < 1e-12);
            CHECK(testing::max_abs_diff(spmm(a, x), testing::naive_matmul(testing::dense_normalized(g, false), x)) <
                  1e-13);
        }
    }
    SUBCASE("dimension mismatch") {
        const auto a = normalize_adjacency(testing::path_graph(3), AdjacencyMode::PlainSymmetric);
        CHECK_THROWS_AS(spmm(a, DenseMatrix(2, 1)), DimensionError);
    }
}

TEST_CASE("row softmax") {
    const DenseMatrix s = row_softmax(DenseMatrix{{1, 0}});
    CHECK(s(0, 0) == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)).epsilon(1e-15));
    CHECK(s(0, 0) == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(s(0, 1) == doctest::Approx(0.2689).epsilon(1e-4));
    std::mt19937_64 rng(8);
    const DenseMatrix big = testing::random_matrix(20, 6, rng, -800.0, 800.0);
    const DenseMatrix p = row_softmax(big);
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double sum = 0.0;
        for (double v : p.row(i)) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    const DenseMatrix moderate = row_softmax(testing::random_matrix(10, 4, rng, -5.0, 5.0));
    for (double v : moderate.data()) CHECK(v > 0.0);
}

TEST_CASE("tape: linear sum has all-ones gradient") {
    Tape tape;
    const auto w = tape.parameter(DenseMatrix(3, 4, 0.25));
    tape.backward(tape.sum(w));
    CHECK(tape.grad(w) == DenseMatrix(3, 4, 1.0));
    CHECK(tape.trace().back() == "sum");
}

TEST_CASE("tape: each primitive matches central differences") {
    std::mt19937_64 rng(21);
    const DenseMatrix a = testing::random_matrix(3, 4, rng);
    const DenseMatrix b = testing::random_matrix(4, 2, rng);
    const DenseMatrix c42 = testing::random_matrix(4, 2, rng);
    const DenseMatrix c34 = testing::random_matrix(3, 4, rng);
    const DenseMatrix c22 = testing::random_matrix(2, 2, rng);
    const Graph g = testing::random_graph(3, 0.7, rng);
    const auto adj = normalize_adjacency(g, AdjacencyMode::SelfLoopSymmetric);
    const std::vector<int> targets{1, 0, 1};

    const std::vector<std::pair<const char*, Builder>> cases{
        {"chain 3x4 -> 4x2", [&](Tape& t, Tape::Var x) { return t.sum(t.relu(t.matmul(t.constant(a), x))); }},
        {"matmul left", [&](Tape& t, Tape::Var x) { return t.sum(t.matmul(t.constant(a), x)); }},
        {"matmul_bt", [&](Tape& t, Tape::Var x) { return t.sum(t.exp(t.scale(t.matmul_bt(x, t.constant(c42)), 0.3))); }},
        {"add/sub/scale", [&](Tape& t, Tape::Var x) {
             const auto c = t.constant(c42);
             return t.sum(t.exp(t.sub(t.scale(t.add(x, c), 0.5), t.add_scalar(c, 0.1))));
         }},
        {"spmm", [&](Tape& t, Tape::Var x) {
             return t.sum(t.exp(t.spmm(adj.matrix, t.matmul(t.constant(c34), x))));
         }},
        {"row_softmax", [&](Tape& t, Tape::Var x) {
             return t.sum(t.log(t.add_scalar(t.row_softmax(t.matmul(t.constant(a), x)), 0.5)));
         }},
        {"row_log_softmax + nll",
         [&](Tape& t, Tape::Var x) { return t.nll(t.row_log_softmax(t.matmul(t.constant(a), x)), targets); }},
        {"cross_entropy", [&](Tape& t, Tape::Var x) { return t.cross_entropy(t.matmul(t.constant(a), x), targets); }},
        {"select_rows", [&](Tape& t, Tape::Var x) {
             return t.sum(t.exp(t.select_rows(t.matmul(t.constant(a), x), {2, 0, 2})));
         }},
        {"pairwise_distance", [&](Tape& t, Tape::Var x) {
             const auto e = t.matmul(t.constant(a), x);
             return t.sum(t.pairwise_distance(e, t.select_rows(e, {0, 1})));
         }},
        {"column_mean/sub_row", [&](Tape& t, Tape::Var x) {
             const auto e = t.matmul(t.constant(a), x);
             return t.sum(t.exp(t.sub_row(e, t.column_mean(e))));
         }},
        {"row_normalize", [&](Tape& t, Tape::Var x) {
             const auto e = t.matmul(t.constant(a), x);
             return t.sum(t.matmul_bt(t.row_normalize(e), t.row_normalize(t.constant(c22))));
         }},
        {"masked_row_max", [&](Tape& t, Tape::Var x) {
             const auto e = t.matmul(t.constant(a), x);
             return t.mean(t.masked_row_max(t.exp(e), {1, 1, 0, 1, 1, 0}));
         }},
        {"dropout (fixed mask)", [&](Tape& t, Tape::Var x) {
             std::mt19937_64 r(77);
             return t.sum(t.exp(t.dropout(t.matmul(t.constant(a), x), 0.5, r)));
         }},
    };
    for (const auto& [name, f] : cases) {
        CAPTURE(name);
        CHECK(gradient_error(f, b) < 1e-6);
    }
}

TEST_CASE("tape: non-finite values name the primitive") {
    Tape tape;
    const auto x = tape.parameter(DenseMatrix{{-1.0}});
    try {
        tape.log(x);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(e.primitive() == "log");
    }
    Tape t2;
    const auto big = t2.parameter(DenseMatrix{{1000.0}});
    CHECK_THROWS_AS(t2.exp(big), NumericError);
}

TEST_CASE("tape: message passing stays local") {
    // Two components; a loss on component A ignores features of component B.
    const Graph g = Graph::from_edges(4, std::vector<std::pair<Index, Index>>{{0, 1}, {2, 3}}, DenseMatrix(4, 2));
    const auto adj = normalize_adjacency(g, AdjacencyMode::SelfLoopSymmetric);
    std::mt19937_64 rng(6);
    Tape tape;
    const auto x = tape.parameter(testing::random_matrix(4, 2, rng));
    const auto h = tape.spmm(adj.matrix, tape.spmm(adj.matrix, x));
    tape.backward(tape.cross_entropy(tape.select_rows(h, {0, 1}), {0, 1}));
    const DenseMatrix gx = tape.grad(x);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(gx(2, c) == 0.0);
        CHECK(gx(3, c) == 0.0);
    }
}

TEST_CASE("adam") {
    AdamConfig cfg;
    cfg.lr = 0.01;
    SUBCASE("zero gradient leaves parameters") {
        DenseMatrix p{{1.0, -2.0}};
        AdamState s;
        adam_step(p, DenseMatrix(1, 2), s, cfg);
        CHECK(p == DenseMatrix{{1.0, -2.0}});
    }
    SUBCASE("first step from zero state") {
        DenseMatrix p(1, 3);
        const DenseMatrix g{{0.5, -2.0, 1e-3}};
        AdamState s;
        adam_step(p, g, s, cfg);
        for (std::size_t i = 0; i < 3; ++i) {
            // m_hat = g, v_hat = g^2 after bias correction.
            const double expect = -cfg.lr * g(0, i) / (std::abs(g(0, i)) + cfg.eps);
            CHECK(p(0, i) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    SUBCASE("constant gradient steps approach lr") {
        DenseMatrix p(1, 1);
        AdamState s;
        double last = 0.0;
        for (int i = 0; i < 2000; ++i) {
            const double before = p(0, 0);
            adam_step(p, DenseMatrix{{3.0}}, s, cfg);
            last = p(0, 0) - before;
        }
        CHECK(last == doctest::Approx(-cfg.lr).epsilon(1e-6));
    }
    SUBCASE("weight decay folds into the gradient") {
        cfg.weight_decay = 0.1;
        DenseMatrix p{{2.0}};
        AdamState s;
        adam_step(p, DenseMatrix{{0.0}}, s, cfg);
        CHECK(p(0, 0) < 2.0);
    }
}
