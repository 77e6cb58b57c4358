#include "coldstart/dataset.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "coldstart/error.hpp"

namespace coldstart {

using nlohmann::json;

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::ifstream open_or_throw(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ParseError("cannot open " + p.string());
    return in;
}

}  // namespace

TextDataset load_text_dataset(const std::filesystem::path& content_path,
                              const std::filesystem::path& cites_path) {
    auto content = open_or_throw(content_path);
    std::vector<std::string> ids;
    std::unordered_map<std::string, Index> id_to_vertex;
    std::unordered_map<std::string, int> label_index;
    std::vector<std::string> label_names;
    std::vector<int> labels;
    std::vector<double> feats;
    std::size_t dim = 0;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(content, line)) {
        ++lineno;
        auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok.size() < 2) throw ParseError("content line needs an id and a label", lineno);
        const std::size_t this_dim = tok.size() - 2;
        if (ids.empty()) {
            dim = this_dim;
        } else if (this_dim != dim) {
            throw ParseError("expected " + std::to_string(dim) + " features, found " + std::to_string(this_dim),
                             lineno);
        }
        if (id_to_vertex.count(tok.front())) throw ParseError("duplicate vertex id '" + tok.front() + "'", lineno);
        for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
            try {
                std::size_t used = 0;
                const double x = std::stod(tok[i], &used);
                if (used != tok[i].size() || !std::isfinite(x)) throw std::invalid_argument("");
                feats.push_back(x);
            } catch (const std::exception&) {
                throw ParseError("bad feature value '" + tok[i] + "'", lineno);
            }
        }
        auto [it, inserted] = label_index.emplace(tok.back(), static_cast<int>(label_names.size()));
        if (inserted) label_names.push_back(tok.back());
        labels.push_back(it->second);
        id_to_vertex.emplace(tok.front(), static_cast<Index>(ids.size()));
        ids.push_back(tok.front());
    }
    if (ids.empty()) throw ParseError("dataset " + content_path.string() + " has no vertices");

    auto cites = open_or_throw(cites_path);
    std::vector<std::pair<Index, Index>> edges;
    std::size_t dropped = 0;
    lineno = 0;
    while (std::getline(cites, line)) {
        ++lineno;
        auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok.size() != 2) throw ParseError("citation line needs exactly two ids", lineno);
        auto a = id_to_vertex.find(tok[0]);
        auto b = id_to_vertex.find(tok[1]);
        if (a == id_to_vertex.end() || b == id_to_vertex.end()) {
            ++dropped;
            continue;
        }
        edges.emplace_back(a->second, b->second);
    }

    const std::size_t n = ids.size();
    const std::size_t classes = label_names.size();
    TextDataset out{Graph::from_edges(n, edges, DenseMatrix(n, dim, std::move(feats)), std::move(labels), classes),
                    std::move(ids), dropped};
    out.graph.set_class_names(std::move(label_names));
    return out;
}

Graph graph_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("graph document must be a JSON object");

    auto require = [&](const char* key) -> const json& {
        if (!doc.contains(key)) throw ValidationError(std::string("missing field \"") + key + "\"");
        return doc.at(key);
    };

    const json& nv = require("num_vertices");
    if (!nv.is_number_integer() || nv.get<long long>() < 0) {
        throw ValidationError("\"num_vertices\" must be a nonnegative integer");
    }
    const auto n = nv.get<std::size_t>();

    std::size_t classes = 0;
    if (doc.contains("num_classes") && !doc["num_classes"].is_null()) {
        const json& nc = doc["num_classes"];
        if (!nc.is_number_integer() || nc.get<long long>() < 0) {
            throw ValidationError("\"num_classes\" must be a nonnegative integer or null");
        }
        classes = nc.get<std::size_t>();
    }

    const json& fj = require("features");
    if (!fj.is_array() || fj.size() != n) {
        throw ValidationError("\"features\" must be an array with one row per vertex");
    }
    std::size_t dim = n ? (fj[0].is_array() ? fj[0].size() : 0) : 0;
    std::vector<double> feats;
    feats.reserve(n * dim);
    for (std::size_t v = 0; v < n; ++v) {
        const json& row = fj[v];
        if (!row.is_array() || row.size() != dim) {
            throw ValidationError("feature row " + std::to_string(v) + " must be an array of " +
                                  std::to_string(dim) + " numbers");
        }
        for (const json& x : row) {
            if (!x.is_number()) throw ValidationError("feature row " + std::to_string(v) + " has a non-number");
            feats.push_back(x.get<double>());
        }
    }

    const json& ej = require("edges");
    if (!ej.is_array()) throw ValidationError("\"edges\" must be an array of [u, v] pairs");
    std::vector<std::pair<Index, Index>> edges;
    edges.reserve(ej.size());
    for (const json& e : ej) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
            throw ValidationError("each edge must be a pair of integers");
        }
        const auto u = e[0].get<long long>();
        const auto v = e[1].get<long long>();
        if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n) {
            throw ValidationError("edge [" + std::to_string(u) + ", " + std::to_string(v) +
                                  "] out of range for " + std::to_string(n) + " vertices");
        }
        edges.emplace_back(static_cast<Index>(u), static_cast<Index>(v));
    }

    std::optional<std::vector<int>> labels;
    if (doc.contains("labels") && !doc["labels"].is_null()) {
        const json& lj = doc["labels"];
        if (!lj.is_array() || lj.size() != n) {
            throw ValidationError("\"labels\" must be null or an array with one entry per vertex");
        }
        labels.emplace();
        labels->reserve(n);
        for (const json& l : lj) {
            if (!l.is_number_integer()) throw ValidationError("labels must be integers");
            const auto x = l.get<long long>();
            if (x < 0 || (classes > 0 && static_cast<std::size_t>(x) >= classes)) {
                throw ValidationError("label " + std::to_string(x) + " outside [0, " + std::to_string(classes) + ")");
            }
            labels->push_back(static_cast<int>(x));
        }
    }
    return Graph::from_edges(n, edges, DenseMatrix(n, dim, std::move(feats)), std::move(labels), classes);
}

std::string graph_to_json(const Graph& g) {
    json doc;
    doc["num_vertices"] = g.num_vertices();
    doc["num_classes"] = g.has_labels() || g.num_classes() ? json(g.num_classes()) : json(nullptr);
    json feats = json::array();
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
        auto r = g.features().row(v);
        feats.push_back(std::vector<double>(r.begin(), r.end()));
    }
    doc["features"] = std::move(feats);
    json edges = json::array();
    for (const auto& [u, v] : g.edge_list()) edges.push_back({u, v});
    doc["edges"] = std::move(edges);
    doc["labels"] = g.has_labels() ? json(g.labels()) : json(nullptr);
    return doc.dump();
}

Graph load_json_graph(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return graph_from_json(buf.str());
}

void write_json_graph(const Graph& g, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << graph_to_json(g) << '\n';
}

Graph generate_sbm(const SbmParams& p) {
    if (p.num_classes < 2) throw ValidationError("generate_sbm needs at least two classes");
    if (!(0.0 <= p.p_out && p.p_out <= p.p_in && p.p_in <= 1.0)) {
        throw ValidationError("generate_sbm needs 0 <= p_out <= p_in <= 1");
    }
    const std::size_t n = p.num_vertices;
    const std::size_t k = p.num_classes;
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<int> labels(n);
    for (std::size_t v = 0; v < n; ++v) labels[v] = static_cast<int>(v * k / std::max<std::size_t>(n, 1));

    std::vector<std::pair<Index, Index>> edges;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            const double prob = labels[u] == labels[v] ? p.p_in : p.p_out;
            if (unit(rng) < prob) edges.emplace_back(static_cast<Index>(u), static_cast<Index>(v));
        }
    }

    DenseMatrix means(k, p.feature_dim);
    if (p.feature_dim >= k) {
        for (std::size_t c = 0; c < k; ++c) means(c, c) = p.feature_shift;
    } else if (p.feature_dim > 0) {
        for (std::size_t c = 0; c < k; ++c) {
            double norm = 0.0;
            for (double& x : means.row(c)) {
                x = gauss(rng);
                norm += x * x;
            }
            norm = std::sqrt(norm);
            for (double& x : means.row(c)) x *= norm > 0.0 ? p.feature_shift / norm : 0.0;
        }
    }
    DenseMatrix features(n, p.feature_dim);
    for (std::size_t v = 0; v < n; ++v) {
        auto mean = means.row(static_cast<std::size_t>(labels[v]));
        auto row = features.row(v);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = mean[j] + gauss(rng);
    }

    return Graph::from_edges(n, edges, std::move(features), std::move(labels), k);
}

DenseMatrix row_normalize_l1(const DenseMatrix& features) {
    DenseMatrix out = features;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        double s = 0.0;
        for (double x : row) s += std::abs(x);
        if (s > 0.0)
            for (double& x : row) x /= s;
    }
    return out;
}

}  // namespace coldstart
