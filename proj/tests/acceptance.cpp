// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coldstart/clustering.hpp"
#include "coldstart/experiment.hpp"
#include "coldstart/propagation.hpp"
#include "heads.hpp"
#include "support.hpp"

using namespace coldstart;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

void gradient_correctness() {
    const auto start = Clock::now();
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
        const testing::HeadInstance in = testing::random_head_instance(rng);
        worst = std::max({worst, testing::head_gradient_error(in, false), testing::head_gradient_error(in, true)});
    }
    const double secs = seconds_since(start);
    report("gradient-correctness", worst < 1e-4 && secs < 5.0,
           fmt("max relative error %.2e over 10 instances x 2 heads (< 1e-4), %.2f s (< 5 s)", worst, secs));
}

DenseMatrix dense_power(const DenseMatrix& a, DenseMatrix y, std::size_t hops, double alpha) {
    for (std::size_t h = 0; h < hops; ++h) {
        const DenseMatrix ay = testing::naive_matmul(a, y);
        for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = alpha * ay.data()[i] + (1.0 - alpha) * y.data()[i];
    }
    return y;
}

std::vector<double> dense_pagerank(const Graph& g, double d) {
    const std::size_t n = g.num_vertices();
    const DenseMatrix a = testing::dense_adjacency(g, false);
    std::vector<double> p(n, 1.0 / static_cast<double>(n)), next(n);
    for (int it = 0; it < 3000; ++it) {
        double dangling = 0.0;
        for (std::size_t u = 0; u < n; ++u)
            if (g.degree(static_cast<Index>(u)) == 0) dangling += p[u];
        for (std::size_t v = 0; v < n; ++v) {
            double s = 0.0;
            for (std::size_t u = 0; u < n; ++u)
                if (a(v, u) != 0.0) s += p[u] / static_cast<double>(g.degree(static_cast<Index>(u)));
            next[v] = (1.0 - d) / static_cast<double>(n) + d * (s + dangling / static_cast<double>(n));
        }
        p.swap(next);
    }
    return p;
}

void propagation_oracles() {
    std::mt19937_64 rng(7);
    double lp_err = 0.0, fp_err = 0.0, pr_sum = 0.0, pr_err = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Graph g = testing::random_graph(8, 0.35, rng, 4);
        DenseMatrix seeds(8, 3);
        for (std::size_t v = 0; v < 8; ++v)
            if (rng() % 2) seeds(v, rng() % 3) = 1.0;
        const std::size_t hops = 1 + rng() % 4;
        const auto plain = normalize_adjacency(g, AdjacencyMode::PlainSymmetric);
        const auto loops = normalize_adjacency(g, AdjacencyMode::SelfLoopSymmetric);
        lp_err = std::max(lp_err, testing::max_abs_diff(label_propagate(plain, seeds, 0.9, hops),
                                                        dense_power(testing::dense_normalized(g, false), seeds, hops, 0.9)));
        fp_err = std::max(fp_err, testing::max_abs_diff(propagate_features(loops, g.features(), hops),
                                                        dense_power(testing::dense_normalized(g, true), g.features(), hops, 1.0)));
        const auto pr = pagerank(g);
        pr_sum = std::max(pr_sum, std::abs(std::accumulate(pr.scores.begin(), pr.scores.end(), 0.0) - 1.0));
        const auto ref = dense_pagerank(g, 0.85);
        for (std::size_t v = 0; v < 8; ++v) pr_err = std::max(pr_err, std::abs(pr.scores[v] - ref[v]));
    }
    report("propagation-oracles", lp_err <= 1e-9 && fp_err <= 1e-9 && pr_sum <= 1e-9 && pr_err <= 1e-8,
           fmt("100 cases: label_propagate %.1e, propagate_features %.1e (<= 1e-9); pagerank |sum-1| %.1e "
               "(<= 1e-9), vs dense %.1e (<= 1e-8)",
               lp_err, fp_err, pr_sum, pr_err));
}

double medoid_cost(const DenseMatrix& x, const std::vector<std::size_t>& chosen) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double best = INFINITY;
        for (std::size_t m : chosen) best = std::min(best, euclidean_distance(x.row(i), x.row(m)));
        total += best;
    }
    return total;
}

double exhaustive_cost(const DenseMatrix& x, std::size_t k) {
    std::vector<char> mask(x.rows(), 0);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), 1);
    double best = INFINITY;
    do {
        std::vector<std::size_t> chosen;
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask[i]) chosen.push_back(i);
        best = std::min(best, medoid_cost(x, chosen));
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return best;
}

void clustering_oracle() {
    std::mt19937_64 rng(31);
    std::size_t optimal = 0;
    double worst = 1.0;
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 5 + rng() % 8;
        const std::size_t k = 2 + rng() % 3;
        const DenseMatrix x = testing::random_matrix(n, 2, rng);
        const double got = kmedoids(x, k, static_cast<std::uint64_t>(t)).cost;
        const double best = exhaustive_cost(x, k);
        if (got <= best * (1.0 + 1e-12)) ++optimal;
        worst = std::max(worst, got / best);
    }
    bool monotone = true;
    std::size_t steps = 0;
    for (int t = 0; t < 50; ++t) {
        const DenseMatrix x = testing::random_matrix(100 + rng() % 200, 2 + rng() % 30, rng);
        const Clustering c = kmeans(x, 2 + rng() % 10, rng());
        for (std::size_t i = 1; i < c.cost_history.size(); ++i, ++steps)
            monotone = monotone && c.cost_history[i] <= c.cost_history[i - 1];
    }
    report("clustering-oracle", optimal >= 45 && worst <= 1.05 && monotone,
           fmt("kmedoids optimal on %zu/50 (>= 45), worst cost ratio %.4f (<= 1.05); kmeans monotone over %zu "
               "Lloyd steps: %s",
               optimal, worst, steps, monotone ? "yes" : "no"));
}

ExperimentConfig cora_config(const std::string& dir) {
    ExperimentConfig cfg;
    cfg.dataset = "cora";
    cfg.data_dir = dir;
    cfg.repeats = 10;
    cfg.rounds = 5;
    return cfg;
}

void elbow_recovery(const Dataset* cora, const ExperimentConfig& base) {
    std::mt19937_64 rng(5);
    const std::size_t ks[] = {3, 5, 8, 3, 5, 8, 3, 5, 8, 5};
    std::size_t hits = 0;
    std::string got;
    for (std::size_t i = 0; i < 10; ++i) {
        auto [x, truth] = testing::blobs(500, ks[i], 10, 10.0, 1.0, rng);
        const ClassEstimate e = estimate_num_classes(x, 2, 100, i);
        hits += e.k == ks[i] ? 1 : 0;
        got += (i ? "," : "") + std::to_string(e.k);
    }
    std::string cora_detail = "cora data missing";
    bool cora_ok = false;
    if (cora) {
        ExperimentConfig cfg = base;
        cfg.setting = Setting::UnknownK;
        const auto start = Clock::now();
        const RunPlan plan = plan_run(cfg, *cora);
        const std::size_t k = plan.estimated_k.value_or(0);
        cora_ok = k >= 5 && k <= 20;
        cora_detail = fmt("cora estimate %zu (in [5, 20]), %.0f s", k, seconds_since(start));
    }
    report("elbow-recovery", hits == 10 && cora_ok,
           fmt("blobs %zu/10 (k = 3,5,8,3,5,8,3,5,8,5 -> %s); ", hits, got.c_str()) + cora_detail);
}

class Runs {
public:
    explicit Runs(const Dataset& data) : data_(data) {}

    const ExperimentResult& get(const ExperimentConfig& cfg) {
        const std::string key = config_to_json(cfg);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        const auto start = Clock::now();
        ExperimentResult r = run_experiment(cfg, data_);
        std::fprintf(stderr, "  ran %s/%s/%s%s eps=%.1f x%zu in %.0f s\n", std::string(to_string(cfg.setting)).c_str(),
                     std::string(to_string(cfg.model)).c_str(), std::string(to_string(cfg.sampler)).c_str(),
                     cfg.label_prop ? "+lp" : "", cfg.annotator.epsilon, cfg.repeats, seconds_since(start));
        return cache_.emplace(key, std::move(r)).first->second;
    }

    /// Mean test accuracy at the given round across repeats.
    double mean_at(const ExperimentConfig& cfg, std::size_t round) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const RunRecord& r : get(cfg).records)
            if (r.round == round && r.test_accuracy) {
                sum += *r.test_accuracy;
                ++n;
            }
        return n ? sum / static_cast<double>(n) : NAN;
    }
    double final_mean(const ExperimentConfig& cfg) { return mean_at(cfg, get(cfg).plan.rounds); }

private:
    const Dataset& data_;
    std::map<std::string, ExperimentResult> cache_;
};

ExperimentConfig variant(ExperimentConfig cfg, Setting s, ModelKind m, SamplerKind k, bool lp) {
    cfg.setting = s;
    cfg.model = m;
    cfg.sampler = k;
    cfg.label_prop = lp;
    return cfg;
}

void cora_reproduction(Runs& runs, const ExperimentConfig& base) {
    const double gpn =
        100.0 * runs.final_mean(variant(base, Setting::Balanced, ModelKind::Gpn, SamplerKind::Medoid, false));
    const double gcn =
        100.0 * runs.final_mean(variant(base, Setting::Balanced, ModelKind::Gcn, SamplerKind::Medoid, true));
    const bool ok = std::abs(gpn - 65.6) <= 8.0 && std::abs(gcn - 71.8) <= 8.0;
    report("cora-balanced", ok,
           fmt("GPN+medoid %.1f (65.6 +- 8.0), GCN+medoid+LP %.1f (71.8 +- 8.0), 10 seeds, B=35", gpn, gcn));
}

void ordering(Runs& runs, const ExperimentConfig& base) {
    // (a) GPN >= GCN at every budget with the random sampler.
    const auto gpn_r = variant(base, Setting::Balanced, ModelKind::Gpn, SamplerKind::Random, false);
    const auto gcn_r = variant(base, Setting::Balanced, ModelKind::Gcn, SamplerKind::Random, false);
    bool a = true;
    std::string a_detail;
    for (std::size_t round = 1; round <= runs.get(gpn_r).plan.rounds; ++round) {
        const double p = runs.mean_at(gpn_r, round), d = runs.mean_at(gcn_r, round);
        a = a && p >= d;
        a_detail += fmt("%s%.1f/%.1f", round > 1 ? " " : "", 100 * p, 100 * d);
    }

    // (b) balanced -> unbalanced drop, averaged over the four per-cell samplers without LP.
    const SamplerKind samplers[4] = {SamplerKind::Random, SamplerKind::Entropy, SamplerKind::PageRank,
                                     SamplerKind::Medoid};
    double drop[2] = {0.0, 0.0};
    const ModelKind models[2] = {ModelKind::Gcn, ModelKind::Gpn};
    for (int m = 0; m < 2; ++m)
        for (SamplerKind s : samplers)
            drop[m] += 0.25 * (runs.final_mean(variant(base, Setting::Balanced, models[m], s, false)) -
                               runs.final_mean(variant(base, Setting::Unbalanced, models[m], s, false)));
    const bool b = drop[0] > drop[1];

    // (c) medoid vs random at B=35, averaged over the LP, GCN and GPN models.
    double medoid = 0.0, random = 0.0;
    for (ModelKind m : {ModelKind::Lp, ModelKind::Gcn, ModelKind::Gpn}) {
        medoid += runs.final_mean(variant(base, Setting::Balanced, m, SamplerKind::Medoid, false)) / 3.0;
        random += runs.final_mean(variant(base, Setting::Balanced, m, SamplerKind::Random, false)) / 3.0;
    }
    const bool c = medoid >= random;

    report("ordering", a && b && c,
           fmt("(a) %s GPN/GCN per round [", a ? "ok" : "violated") + a_detail +
               fmt("]; (b) %s drop GCN %.1f vs GPN %.1f; (c) %s medoid %.1f vs random %.1f", b ? "ok" : "violated",
                   100 * drop[0], 100 * drop[1], c ? "ok" : "violated", 100 * medoid, 100 * random));
}

void noisy_annotator(Runs& runs, const ExperimentConfig& base) {
    std::string detail;
    double first = 0.0, last = 0.0;
    for (int i = 0; i <= 5; ++i) {
        ExperimentConfig cfg = variant(base, Setting::Unbalanced, ModelKind::Gpn, SamplerKind::Medoid, true);
        cfg.annotator = {i == 0 ? Annotator::Kind::Oracle : Annotator::Kind::Noisy, 0.1 * i};
        const double m = runs.final_mean(cfg);
        if (i == 0) first = m;
        last = m;
        detail += fmt("%seps %.1f: %.1f", i ? ", " : "", 0.1 * i, 100 * m);
    }
    const bool ok = last > 1.0 / 7.0 && first - last >= 0.10;
    report("noisy-annotator", ok,
           detail + fmt(" (eps 0.5 > 14.3; eps 0 - eps 0.5 = %.1f >= 10)", 100 * (first - last)));
}

std::string csv_of(const ExperimentResult& r) {
    std::ostringstream out;
    write_csv(out, r.records);
    return out.str();
}

void determinism(const Dataset* cora, const ExperimentConfig& base) {
    std::vector<std::pair<std::string, bool>> cases;
    ExperimentConfig sbm;
    sbm.setting = Setting::UnknownK;
    sbm.sampler = SamplerKind::Entropy;
    sbm.label_prop = true;
    sbm.repeats = 3;
    sbm.budget = 15;
    sbm.estimate_k_max = 20;
    const std::string ref = csv_of(run_experiment(sbm));
    cases.emplace_back("sbm replay", csv_of(run_experiment(config_from_json(config_to_json(sbm)))) == ref);
    sbm.threads = 3;
    cases.emplace_back("sbm threads", csv_of(run_experiment(sbm)) == ref);
    if (cora) {
        ExperimentConfig cfg = variant(base, Setting::Unbalanced, ModelKind::Gpn, SamplerKind::PageRank, true);
        cfg.repeats = 2;
        cfg.annotator = {Annotator::Kind::Noisy, 0.2};
        const std::string a = csv_of(run_experiment(cfg, *cora));
        cases.emplace_back("cora replay", csv_of(run_experiment(config_from_json(config_to_json(cfg)), *cora)) == a);
    } else {
        cases.emplace_back("cora data missing", false);
    }
    bool ok = true;
    std::string detail;
    for (const auto& [name, same] : cases) {
        ok = ok && same;
        detail += (detail.empty() ? "" : ", ") + name + (same ? " identical" : " DIFFERS");
    }
    report("determinism", ok, detail);
}

}  // namespace

int main() {
    const std::string cora_dir = COLDSTART_CORA_DIR;
    const ExperimentConfig base = cora_config(cora_dir);
    std::optional<Dataset> cora;
    if (std::filesystem::exists(std::filesystem::path(cora_dir) / "cora.content")) cora = load_dataset(base);

    gradient_correctness();
    propagation_oracles();
    clustering_oracle();
    if (cora) {
        const double h = homophily_ratio(cora->graph);
        report("homophily", std::abs(h - 0.63) <= 0.02, fmt("cora edge homophily %.4f (0.63 +- 0.02)", h));
    } else {
        report("homophily", false, "cora data missing under " + cora_dir);
    }
    determinism(cora ? &*cora : nullptr, base);
    elbow_recovery(cora ? &*cora : nullptr, base);
    if (cora) {
        Runs runs(*cora);
        cora_reproduction(runs, base);
        ordering(runs, base);
        noisy_annotator(runs, base);
    } else {
        for (const char* name : {"cora-balanced", "ordering", "noisy-annotator"})
            report(name, false, "cora data missing under " + cora_dir);
    }
    std::printf("%d criteria failed\n", failures);
    return failures;
}
