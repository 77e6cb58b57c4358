#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "coldstart/dataset.hpp"
#include "coldstart/error.hpp"
#include "coldstart/graph.hpp"
#include "support.hpp"

using namespace coldstart;

namespace {

std::filesystem::path scratch_dir() {
    auto dir = std::filesystem::temp_directory_path() / "coldstart_graph_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

std::filesystem::path write_text(const std::string& name, const std::string& text) {
    const auto path = scratch_dir() / name;
    std::ofstream(path) << text;
    return path;
}

void check_invariants(const Graph& g) {
    const auto& off = g.csr_offsets();
    REQUIRE(off.size() == g.num_vertices() + 1);
    CHECK(off.back() == g.csr_neighbors().size());
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
        CHECK(off[v] <= off[v + 1]);
        const auto nb = g.neighbors(static_cast<Index>(v));
        CHECK(std::is_sorted(nb.begin(), nb.end()));
        CHECK(std::adjacent_find(nb.begin(), nb.end()) == nb.end());
        for (Index u : nb) {
            CHECK(u != static_cast<Index>(v));
            const auto back = g.neighbors(u);
            CHECK(std::binary_search(back.begin(), back.end(), static_cast<Index>(v)));
        }
    }
    if (g.has_labels()) {
        for (int l : g.labels()) CHECK((l >= 0 && static_cast<std::size_t>(l) < g.num_classes()));
    }
}

}  // namespace

TEST_CASE("from_edges keeps CSR invariants on random multigraph input") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng() % 20;
        std::vector<std::pair<Index, Index>> edges;
        const std::size_t m = rng() % 60;
        for (std::size_t e = 0; e < m; ++e) {
            edges.emplace_back(static_cast<Index>(rng() % n), static_cast<Index>(rng() % n));
        }
        const Graph g = Graph::from_edges(n, edges, DenseMatrix(n, 2));
        check_invariants(g);
        std::vector<std::pair<Index, Index>> expected;
        for (auto [u, v] : edges)
            if (u != v) expected.emplace_back(std::min(u, v), std::max(u, v));
        std::sort(expected.begin(), expected.end());
        expected.erase(std::unique(expected.begin(), expected.end()), expected.end());
        auto got = g.edge_list();
        std::sort(got.begin(), got.end());
        CHECK(got == expected);
    }
}

TEST_CASE("from_edges rejects bad input") {
    const std::vector<std::pair<Index, Index>> bad{{0, 5}};
    CHECK_THROWS_AS(Graph::from_edges(3, bad, DenseMatrix(3, 1)), ValidationError);
    CHECK_THROWS_AS(Graph::from_edges(3, {}, DenseMatrix(2, 1)), ValidationError);
    CHECK_THROWS_AS(Graph::from_edges(2, {}, DenseMatrix(2, 1), std::vector<int>{0, 2}, 2), ValidationError);
}

TEST_CASE("text loader") {
    SUBCASE("one vertex and an empty cites file") {
        const auto content = write_text("one.content", "p1 0 1 0 A\n");
        const auto cites = write_text("one.cites", "");
        const TextDataset d = load_text_dataset(content, cites);
        CHECK(d.graph.num_vertices() == 1);
        CHECK(d.graph.num_edges() == 0);
        CHECK(d.graph.feature_dim() == 3);
        CHECK(d.vertex_ids == std::vector<std::string>{"p1"});
    }
    SUBCASE("reversed duplicate citations collapse into one edge") {
        const auto content = write_text("dup.content", "a 1 X\nb 0 Y\nc 1 X\n");
        const auto cites = write_text("dup.cites", "a b\nb a\na b\n");
        const TextDataset d = load_text_dataset(content, cites);
        CHECK(d.graph.num_edges() == 1);
        CHECK(d.graph.degree(0) == 1);
        CHECK(d.graph.degree(1) == 1);
        CHECK(d.graph.num_classes() == 2);
        CHECK(d.graph.labels() == std::vector<int>{0, 1, 0});
        CHECK(d.graph.class_name(1) == "Y");
    }
    SUBCASE("unknown endpoints are dropped and counted") {
        const auto content = write_text("dangle.content", "a 1 X\nb 0 Y\n");
        const auto cites = write_text("dangle.cites", "a b\na zz\nqq b\n");
        const TextDataset d = load_text_dataset(content, cites);
        CHECK(d.graph.num_edges() == 1);
        CHECK(d.dropped_edges == 2);
    }
    SUBCASE("malformed line reports its line number") {
        const auto content = write_text("bad.content", "a 1 0 X\nb 1 Y\n");
        const auto cites = write_text("bad.cites", "");
        try {
            load_text_dataset(content, cites);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
    }
    SUBCASE("empty content file") {
        const auto content = write_text("empty.content", "");
        const auto cites = write_text("empty.cites", "");
        CHECK_THROWS_AS(load_text_dataset(content, cites), Error);
    }
}

TEST_CASE("json graphs") {
    SUBCASE("triangle") {
        const Graph g = graph_from_json(
            R"({"num_vertices": 3, "num_classes": 2, "features": [[1],[2],[3]],
                "edges": [[0,1],[1,2],[2,0]], "labels": [0,1,1]})");
        for (Index v = 0; v < 3; ++v) CHECK(g.degree(v) == 2);
        CHECK(g.has_labels());
    }
    SUBCASE("labels are optional") {
        const Graph g = graph_from_json(R"({"num_vertices": 2, "features": [[0],[1]], "edges": [[0,1]]})");
        CHECK_FALSE(g.has_labels());
    }
    SUBCASE("out-of-range edge") {
        CHECK_THROWS_AS(
            graph_from_json(R"({"num_vertices": 3, "features": [[0],[0],[0]], "edges": [[0,5]], "labels": null})"),
            ValidationError);
    }
    SUBCASE("label beyond num_classes") {
        CHECK_THROWS_AS(graph_from_json(R"({"num_vertices": 2, "num_classes": 2, "features": [[0],[0]],
                                           "edges": [], "labels": [0, 2]})"),
                        ValidationError);
    }
    SUBCASE("schema violation") {
        CHECK_THROWS_AS(graph_from_json(R"({"num_vertices": "three"})"), Error);
        CHECK_THROWS_AS(graph_from_json("[1, 2"), Error);
    }
    SUBCASE("round trip on random graphs") {
        std::mt19937_64 rng(5);
        for (int t = 0; t < 20; ++t) {
            const Graph g = testing::random_graph(1 + rng() % 15, 0.3, rng, 2, t % 2 ? 3 : 0);
            const auto path = scratch_dir() / "roundtrip.json";
            write_json_graph(g, path);
            CHECK(load_json_graph(path) == g);
        }
    }
}

TEST_CASE("sbm generator") {
    SbmParams p;
    p.num_vertices = 200;
    p.p_out = 0.0;
    const Graph a = generate_sbm(p);
    check_invariants(a);
    CHECK(homophily_ratio(a) == doctest::Approx(1.0));
    CHECK(generate_sbm(p) == a);

    SbmParams q;
    q.num_vertices = 2000;
    q.p_in = q.p_out = 0.01;
    const Graph b = generate_sbm(q);
    CHECK(std::abs(homophily_ratio(b)) < 0.05);

    std::vector<std::size_t> sizes(p.num_classes, 0);
    for (int l : a.labels()) ++sizes[static_cast<std::size_t>(l)];
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    CHECK(*hi - *lo <= 1);
}

TEST_CASE("normalize_adjacency") {
    SUBCASE("single edge, plain") {
        const Graph g = testing::path_graph(2);
        const auto a = normalize_adjacency(g, AdjacencyMode::PlainSymmetric);
        CHECK(a.weight(0, 1) == 1.0);
        CHECK(a.weight(1, 0) == 1.0);
    }
    SUBCASE("path of three, plain") {
        const auto a = normalize_adjacency(testing::path_graph(3), AdjacencyMode::PlainSymmetric);
        CHECK(a.weight(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    }
    SUBCASE("isolated vertex") {
        const Graph g = Graph::from_edges(3, std::vector<std::pair<Index, Index>>{{0, 1}}, DenseMatrix(3, 1));
        const auto self = normalize_adjacency(g, AdjacencyMode::SelfLoopSymmetric);
        CHECK(self.matrix.row_indices(2).size() == 1);
        CHECK(self.weight(2, 2) == 1.0);
        const auto plain = normalize_adjacency(g, AdjacencyMode::PlainSymmetric);
        CHECK(plain.matrix.row_indices(2).empty());
    }
    SUBCASE("matches the dense construction and stays symmetric") {
        std::mt19937_64 rng(3);
        for (int t = 0; t < 40; ++t) {
            const Graph g = testing::random_graph(2 + rng() % 14, 0.3, rng);
            for (bool loops : {false, true}) {
                const auto a =
                    normalize_adjacency(g, loops ? AdjacencyMode::SelfLoopSymmetric : AdjacencyMode::PlainSymmetric);
                const DenseMatrix ref = testing::dense_normalized(g, loops);
                CHECK(testing::max_abs_diff(a.matrix.to_dense(), ref) < 1e-15);
                for (std::size_t u = 0; u < g.num_vertices(); ++u) {
                    double row = 0.0;
                    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
                        CHECK(a.weight(static_cast<Index>(u), static_cast<Index>(v)) ==
                              a.weight(static_cast<Index>(v), static_cast<Index>(u)));
                        row += a.weight(static_cast<Index>(u), static_cast<Index>(v));
                    }
                    if (!loops) {
                        CHECK(row <= std::sqrt(static_cast<double>(g.degree(static_cast<Index>(u)))) + 1e-12);
                        for (double w : a.matrix.row_values(u)) CHECK((w > 0.0 && w <= 1.0));
                    }
                }
            }
        }
    }
}

TEST_CASE("homophily ratio") {
    const DenseMatrix x(4, 1);
    SUBCASE("all edges inside two equal classes") {
        const Graph g = Graph::from_edges(4, std::vector<std::pair<Index, Index>>{{0, 1}, {2, 3}}, x,
                                          std::vector<int>{0, 0, 1, 1}, 2);
        CHECK(homophily_ratio(g) == doctest::Approx(1.0));
    }
    SUBCASE("all edges across classes") {
        const Graph g = Graph::from_edges(4, std::vector<std::pair<Index, Index>>{{0, 2}, {1, 3}, {0, 3}}, x,
                                          std::vector<int>{0, 0, 1, 1}, 2);
        CHECK(homophily_ratio(g) == 0.0);
    }
    SUBCASE("edgeless graph") {
        const Graph g = Graph::from_edges(4, {}, x, std::vector<int>{0, 0, 1, 1}, 2);
        CHECK(homophily_ratio(g) == 0.0);
    }
    SUBCASE("unlabeled graph") {
        CHECK_THROWS_AS(homophily_ratio(testing::path_graph(3)), ValidationError);
    }
    SUBCASE("bounded and invariant under class renaming") {
        std::mt19937_64 rng(9);
        for (int t = 0; t < 40; ++t) {
            const std::size_t n = 4 + rng() % 20;
            const std::size_t c = 2 + rng() % 3;
            const Graph g = testing::random_graph(n, 0.3, rng, 1, c);
            const double h = homophily_ratio(g);
            CHECK((h >= 0.0 && h <= 1.0));
            std::vector<int> perm(c);
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            std::vector<int> relabeled = g.labels();
            for (int& l : relabeled) l = perm[static_cast<std::size_t>(l)];
            const Graph r = Graph::from_edges(n, g.edge_list(), g.features(), relabeled, c);
            CHECK(homophily_ratio(r) == doctest::Approx(h).epsilon(1e-12));
        }
    }
}
