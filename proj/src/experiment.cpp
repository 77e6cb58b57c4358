#include "coldstart/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "coldstart/clustering.hpp"
#include "coldstart/error.hpp"
#include "coldstart/propagation.hpp"

namespace coldstart {

using nlohmann::json;

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix(splitmix(base ^ splitmix(a)) ^ splitmix(b + 0x51ed27));
}

std::string_view annotator_name(Annotator::Kind k) {
    switch (k) {
        case Annotator::Kind::Oracle: return "oracle";
        case Annotator::Kind::Noisy: return "noisy";
        case Annotator::Kind::Interactive: return "interactive";
    }
    return "?";
}

Annotator::Kind parse_annotator(const std::string& s) {
    if (s == "oracle") return Annotator::Kind::Oracle;
    if (s == "noisy") return Annotator::Kind::Noisy;
    if (s == "interactive") return Annotator::Kind::Interactive;
    throw ValidationError("unknown annotator '" + s + "' (expected oracle, noisy or interactive)");
}

bool is_text_dataset(const std::string& name) {
    return name == "cora" || name == "citeseer" || name == "pubmed";
}

template <typename T>
void read(const json& j, const char* key, T& dst) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config field \"") + key + "\": " + e.what());
    }
}

template <typename T>
void read(const json& j, const char* key, std::optional<T>& dst) {
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) {
        dst.reset();
        return;
    }
    T v{};
    read(j, key, v);
    dst = v;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["dataset"] = c.dataset;
    j["data_dir"] = c.data_dir;
    j["sbm"] = {{"num_vertices", c.sbm.num_vertices}, {"num_classes", c.sbm.num_classes},
                {"p_in", c.sbm.p_in},                 {"p_out", c.sbm.p_out},
                {"feature_dim", c.sbm.feature_dim},   {"feature_shift", c.sbm.feature_shift},
                {"seed", c.sbm.seed}};
    j["normalize_features"] = c.normalize_features ? json(*c.normalize_features) : json(nullptr);
    j["model"] = to_string(c.model);
    j["sampler"] = to_string(c.sampler);
    j["setting"] = to_string(c.setting);
    j["label_prop"] = c.label_prop;
    j["budget"] = c.budget ? json(*c.budget) : json(nullptr);
    j["rounds"] = c.rounds;
    j["quota"] = c.quota;
    j["repeats"] = c.repeats;
    j["seed"] = c.seed;
    j["split_seed"] = c.split_seed;
    j["test_fraction"] = c.test_fraction;
    j["annotator"] = {{"kind", annotator_name(c.annotator.kind)}, {"epsilon", c.annotator.epsilon}};
    const HyperParams& h = c.hyper;
    j["hyper"] = {{"alpha", h.alpha},
                  {"entropy_threshold", h.entropy_threshold},
                  {"lambda", h.lambda},
                  {"lr", h.lr},
                  {"weight_decay", h.weight_decay},
                  {"hidden", h.hidden},
                  {"dropout", h.dropout},
                  {"lp_hops", h.lp_hops},
                  {"damping", h.damping},
                  {"max_epochs", h.max_epochs},
                  {"patience", h.patience},
                  {"pseudo_in_prototypes", h.pseudo_in_prototypes}};
    j["num_classes"] = c.num_classes ? json(*c.num_classes) : json(nullptr);
    j["class_names"] = c.class_names;
    j["featprop_hops"] = c.featprop_hops;
    j["estimate_hops"] = c.estimate_hops;
    j["estimate_k_max"] = c.estimate_k_max;
    j["estimate_n_init"] = c.estimate_n_init;
    j["threads"] = c.threads;
    j["record_timing"] = c.record_timing;
    return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid config JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    ExperimentConfig c;
    read(j, "dataset", c.dataset);
    read(j, "data_dir", c.data_dir);
    if (j.contains("sbm") && j["sbm"].is_object()) {
        const json& s = j["sbm"];
        read(s, "num_vertices", c.sbm.num_vertices);
        read(s, "num_classes", c.sbm.num_classes);
        read(s, "p_in", c.sbm.p_in);
        read(s, "p_out", c.sbm.p_out);
        read(s, "feature_dim", c.sbm.feature_dim);
        read(s, "feature_shift", c.sbm.feature_shift);
        read(s, "seed", c.sbm.seed);
    }
    read(j, "normalize_features", c.normalize_features);
    std::string name;
    try {
        if (j.contains("model")) c.model = parse_model_kind(j.at("model").get<std::string>());
        if (j.contains("sampler")) c.sampler = parse_sampler(j.at("sampler").get<std::string>());
        if (j.contains("setting")) c.setting = parse_setting(j.at("setting").get<std::string>());
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    } catch (const ValidationError&) {
        throw;
    } catch (const Error& e) {
        throw ValidationError(e.what());
    }
    read(j, "label_prop", c.label_prop);
    read(j, "budget", c.budget);
    read(j, "rounds", c.rounds);
    read(j, "quota", c.quota);
    read(j, "repeats", c.repeats);
    read(j, "seed", c.seed);
    read(j, "split_seed", c.split_seed);
    read(j, "test_fraction", c.test_fraction);
    if (j.contains("annotator")) {
        const json& a = j["annotator"];
        if (a.is_string()) {
            c.annotator.kind = parse_annotator(a.get<std::string>());
        } else if (a.is_object()) {
            std::string kind = "oracle";
            read(a, "kind", kind);
            c.annotator.kind = parse_annotator(kind);
            read(a, "epsilon", c.annotator.epsilon);
        } else {
            throw ValidationError("config field \"annotator\" must be a string or an object");
        }
    }
    if (j.contains("hyper") && j["hyper"].is_object()) {
        const json& h = j["hyper"];
        HyperParams& p = c.hyper;
        read(h, "alpha", p.alpha);
        read(h, "entropy_threshold", p.entropy_threshold);
        read(h, "lambda", p.lambda);
        read(h, "lr", p.lr);
        read(h, "weight_decay", p.weight_decay);
        read(h, "hidden", p.hidden);
        read(h, "dropout", p.dropout);
        read(h, "lp_hops", p.lp_hops);
        read(h, "damping", p.damping);
        read(h, "max_epochs", p.max_epochs);
        read(h, "patience", p.patience);
        read(h, "pseudo_in_prototypes", p.pseudo_in_prototypes);
    }
    read(j, "num_classes", c.num_classes);
    read(j, "class_names", c.class_names);
    read(j, "featprop_hops", c.featprop_hops);
    read(j, "estimate_hops", c.estimate_hops);
    read(j, "estimate_k_max", c.estimate_k_max);
    read(j, "estimate_n_init", c.estimate_n_init);
    read(j, "threads", c.threads);
    read(j, "record_timing", c.record_timing);
    validate(c);
    return c;
}

void validate(const ExperimentConfig& c) {
    auto fail = [](const std::string& m) { throw ValidationError(m); };
    if (c.repeats < 1) fail("repeats must be at least 1");
    if (c.quota < 1) fail("quota must be at least 1");
    if (!(c.annotator.epsilon >= 0.0 && c.annotator.epsilon <= 1.0)) fail("epsilon must lie in [0, 1]");
    if (!(c.test_fraction >= 0.0 && c.test_fraction < 1.0)) fail("test_fraction must lie in [0, 1)");
    const HyperParams& h = c.hyper;
    if (!(h.alpha >= 0.0 && h.alpha <= 1.0)) fail("alpha must lie in [0, 1]");
    if (!(h.entropy_threshold >= 0.0 && h.entropy_threshold <= 1.0)) fail("entropy threshold must lie in [0, 1]");
    if (!(h.dropout >= 0.0 && h.dropout < 1.0)) fail("dropout must lie in [0, 1)");
    if (!(h.lr > 0.0)) fail("learning rate must be positive");
    if (!(h.lambda >= 0.0)) fail("lambda must be nonnegative");
    if (h.hidden < 1) fail("hidden size must be at least 1");
    if (!(h.damping > 0.0 && h.damping < 1.0)) fail("damping must lie in (0, 1)");
    if (c.annotator.kind == Annotator::Kind::Interactive && c.repeats != 1) {
        fail("interactive sessions run a single repeat");
    }
    if (c.dataset.empty()) fail("dataset must be named");
    if (!(c.dataset == "sbm" || is_text_dataset(c.dataset) || c.dataset.rfind("json:", 0) == 0)) {
        fail("unknown dataset '" + c.dataset + "' (expected cora, citeseer, pubmed, sbm or json:<path>)");
    }
}

Dataset load_dataset(const ExperimentConfig& cfg) {
    Dataset d;
    bool normalize = false;
    if (cfg.dataset == "sbm") {
        d.graph = generate_sbm(cfg.sbm);
    } else if (cfg.dataset.rfind("json:", 0) == 0) {
        d.graph = load_json_graph(cfg.dataset.substr(5));
    } else if (is_text_dataset(cfg.dataset)) {
        std::filesystem::path dir = cfg.data_dir;
        if (dir.empty()) dir = std::filesystem::path("data") / cfg.dataset;
        TextDataset t = load_text_dataset(dir / (cfg.dataset + ".content"), dir / (cfg.dataset + ".cites"));
        d.graph = std::move(t.graph);
        d.vertex_ids = std::move(t.vertex_ids);
        normalize = true;
    } else {
        throw ValidationError("unknown dataset '" + cfg.dataset + "'");
    }
    if (cfg.normalize_features.value_or(normalize)) {
        d.graph = d.graph.with_features(row_normalize_l1(d.graph.features()));
    }
    if (d.vertex_ids.empty()) {
        d.vertex_ids.reserve(d.graph.num_vertices());
        for (std::size_t v = 0; v < d.graph.num_vertices(); ++v) d.vertex_ids.push_back(std::to_string(v));
    }
    return d;
}

std::vector<char> test_split(const Graph& g, double fraction, std::uint64_t seed) {
    const std::size_t n = g.num_vertices();
    std::vector<char> mask(n, 0);
    std::mt19937_64 rng(derive(seed, 0x7e57));
    std::vector<std::vector<Index>> groups(g.has_labels() ? g.num_classes() : 1);
    for (std::size_t v = 0; v < n; ++v) {
        groups[g.has_labels() ? static_cast<std::size_t>(g.labels()[v]) : 0].push_back(static_cast<Index>(v));
    }
    for (auto& members : groups) {
        std::shuffle(members.begin(), members.end(), rng);
        const auto take = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(members.size())));
        for (std::size_t i = 0; i < take && i < members.size(); ++i) mask[static_cast<std::size_t>(members[i])] = 1;
    }
    return mask;
}

RunPlan plan_run(const ExperimentConfig& cfg, const Dataset& data) {
    validate(cfg);
    const Graph& g = data.graph;
    RunPlan plan;
    if (cfg.num_classes) {
        plan.num_classes = *cfg.num_classes;
    } else if (!cfg.class_names.empty()) {
        plan.num_classes = cfg.class_names.size();
    } else if (g.has_labels()) {
        plan.num_classes = g.num_classes();
    }
    if (cfg.annotator.kind != Annotator::Kind::Interactive && !g.has_labels()) {
        throw ValidationError("oracle and noisy annotators need a dataset with ground-truth labels");
    }
    if (cfg.setting == Setting::Balanced && !g.has_labels()) {
        throw ValidationError("the balanced setting needs ground-truth labels");
    }
    if (plan.num_classes == 0 && !(cfg.setting == Setting::UnknownK && cfg.budget)) {
        throw ValidationError("the number of classes is unknown; give num_classes or a budget in unknown-k mode");
    }

    plan.cells = plan.num_classes;
    plan.model_width = plan.num_classes;
    if (cfg.setting == Setting::UnknownK) {
        const DenseMatrix space = propagate_features(normalize_adjacency(g, AdjacencyMode::SelfLoopSymmetric),
                                                     g.features(), cfg.estimate_hops);
        const ClassEstimate est =
            estimate_num_classes(space, 2, cfg.estimate_k_max, derive(cfg.split_seed, 0xe57), cfg.estimate_n_init);
        plan.estimated_k = est.k;
        plan.cells = est.k;
        plan.model_width = std::max(est.k, plan.num_classes);
    }
    plan.budget = cfg.budget.value_or(cfg.rounds * plan.num_classes * cfg.quota);
    plan.draws_per_round = plan.cells * cfg.quota;
    plan.rounds = plan.draws_per_round ? (plan.budget + plan.draws_per_round - 1) / plan.draws_per_round : 0;
    plan.test_mask = test_split(g, cfg.test_fraction, cfg.split_seed);
    std::size_t eligible = 0;
    for (char t : plan.test_mask) eligible += t ? 0 : 1;
    if (plan.budget > eligible) throw ValidationError("budget exceeds the number of non-test vertices");
    return plan;
}

namespace {

struct Shared {
    const ExperimentConfig& cfg;
    const Dataset& data;
    const RunPlan& plan;
    const ModelContext& ctx;
    std::vector<Index> test_vertices;
    std::vector<Index> train_vertices;
};

std::optional<double> test_accuracy(const Shared& sh, const ModelOutput& out) {
    const Graph& g = sh.data.graph;
    if (!g.has_labels() || sh.test_vertices.empty()) return std::nullopt;
    std::size_t correct = 0;
    for (Index v : sh.test_vertices) {
        if (static_cast<int>(argmax(out.logits.row(static_cast<std::size_t>(v)))) == g.labels()[v]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(sh.test_vertices.size());
}

const DenseMatrix& clustering_space(ModelKind kind, const ModelOutput& out) {
    return kind == ModelKind::Gpn ? out.embeddings : out.logits;
}

std::vector<LabeledVertex> propagate_pseudo(const Shared& sh, const LabelState& state) {
    const HyperParams& h = sh.cfg.hyper;
    const std::size_t n = sh.data.graph.num_vertices();
    DenseMatrix seeds(n, sh.plan.model_width);
    std::vector<char> exclude(n, 0);
    for (Index v : state.annotated()) {
        seeds(static_cast<std::size_t>(v), static_cast<std::size_t>(state.human_label(v))) = 1.0;
        exclude[static_cast<std::size_t>(v)] = 1;
    }
    for (std::size_t v = 0; v < n; ++v)
        if (!state.eligible()[v]) exclude[v] = 1;
    const DenseMatrix y = label_propagate(sh.ctx.plain, seeds, h.alpha, h.lp_hops);
    std::vector<LabeledVertex> out;
    for (const PseudoLabel& p : filter_pseudo_labels(y, h.entropy_threshold, exclude)) {
        out.push_back({p.vertex, p.label, false});
    }
    return out;
}

struct RepeatResult {
    std::vector<RunRecord> records;
    bool aborted = false;
    std::string message;
};

RepeatResult run_repeat(const Shared& sh, std::size_t repeat, const Annotator& annotator, const RunHooks& hooks,
                        std::mutex* hook_mutex) {
    using Clock = std::chrono::steady_clock;
    const ExperimentConfig& cfg = sh.cfg;
    const Graph& g = sh.data.graph;
    const std::uint64_t seed = derive(cfg.seed, repeat);
    std::mt19937_64 init_rng(derive(seed, 1));
    std::mt19937_64 select_rng(derive(seed, 2));
    std::mt19937_64 annotate_rng(derive(seed, 3));

    std::vector<char> eligible(g.num_vertices());
    for (std::size_t v = 0; v < eligible.size(); ++v) eligible[v] = sh.plan.test_mask[v] ? 0 : 1;
    LabelState state(std::move(eligible), sh.plan.budget);

    GcnParams params = GcnParams::glorot(g.feature_dim(), cfg.hyper.hidden, sh.plan.model_width, init_rng);
    ModelOutput output = untrained_output(cfg.model, sh.ctx, params);

    RepeatResult result;
    auto emit = [&](std::size_t round, Clock::time_point start, const TrainResult* train) {
        RunRecord r;
        r.run_id = repeat;
        r.seed = seed;
        r.setting = cfg.setting;
        r.model = cfg.model;
        r.sampler = cfg.sampler;
        r.label_prop = cfg.label_prop;
        r.round = round;
        r.budget_used = state.budget_used();
        r.test_accuracy = test_accuracy(sh, output);
        if (cfg.record_timing) {
            r.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        }
        r.classes_covered = static_cast<std::size_t>(std::count(output.covered.begin(), output.covered.end(), 1));
        r.pseudo_labels = state.pseudo().size();
        r.pagerank_converged = sh.ctx.pagerank.converged;
        if (train) {
            r.epochs = train->epochs;
            r.regularizers_disabled = train->regularizers_disabled;
        }
        result.records.push_back(r);
        if (hooks.on_record) {
            std::unique_lock<std::mutex> lock;
            if (hook_mutex) lock = std::unique_lock<std::mutex>(*hook_mutex);
            hooks.on_record(r);
        }
    };
    auto publish = [&] {
        if (!hooks.on_model) return;
        std::unique_lock<std::mutex> lock;
        if (hook_mutex) lock = std::unique_lock<std::mutex>(*hook_mutex);
        hooks.on_model(output);
    };
    emit(0, Clock::now(), nullptr);
    publish();

    std::vector<Index> featprop_queue;
    std::size_t featprop_next = 0;
    if (cfg.sampler == SamplerKind::FeatProp) {
        featprop_queue = featprop_select(g, sh.plan.budget, cfg.featprop_hops, derive(seed, 4), sh.train_vertices);
    }

    try {
        for (std::size_t round = 1; state.budget_left() > 0; ++round) {
            const auto start = Clock::now();
            std::vector<Index> chosen;
            if (cfg.sampler == SamplerKind::FeatProp) {
                const std::size_t take = std::min(sh.plan.draws_per_round, featprop_queue.size() - featprop_next);
                chosen.assign(featprop_queue.begin() + static_cast<std::ptrdiff_t>(featprop_next),
                              featprop_queue.begin() + static_cast<std::ptrdiff_t>(featprop_next + take));
                featprop_next += take;
            } else {
                const DenseMatrix& space = clustering_space(cfg.model, output);
                const Partition part =
                    partition_vertices(cfg.setting, g, space, state, sh.plan.cells, derive(seed, 5, round));
                SamplerInputs inputs{&output.logits, &space, &sh.ctx.pagerank};
                chosen = select_vertices(cfg.sampler, part, cfg.quota, state, inputs, select_rng);
            }
            if (chosen.size() > state.budget_left()) chosen.resize(state.budget_left());
            if (chosen.empty()) break;

            const std::vector<int> labels = annotate(annotator, chosen, g, annotate_rng);
            for (std::size_t i = 0; i < chosen.size(); ++i) {
                if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= sh.plan.model_width) {
                    throw ValidationError("annotated label " + std::to_string(labels[i]) + " exceeds the model width");
                }
                state.add_human(chosen[i], labels[i]);
            }
            if (hooks.on_progress) {
                std::unique_lock<std::mutex> lock;
                if (hook_mutex) lock = std::unique_lock<std::mutex>(*hook_mutex);
                hooks.on_progress(round, state.budget_used());
            }
            state.set_pseudo(cfg.label_prop ? propagate_pseudo(sh, state) : std::vector<LabeledVertex>{});

            const TrainResult train = train_model(cfg.model, sh.ctx, state.training_set(), cfg.hyper, params,
                                                  derive(seed, 6, round));
            output = train.output;
            emit(round, start, &train);
            publish();
        }
    } catch (const SessionAborted& e) {
        result.aborted = true;
        result.message = e.what();
    }
    return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data, const Annotator* interactive,
                                const RunHooks& hooks) {
    ExperimentResult result;
    result.plan = plan_run(cfg, data);
    if (hooks.on_plan) hooks.on_plan(result.plan);
    const Graph& g = data.graph;

    Annotator annotator;
    switch (cfg.annotator.kind) {
        case Annotator::Kind::Oracle: annotator = Annotator::oracle(); break;
        case Annotator::Kind::Noisy: annotator = Annotator::noisy(cfg.annotator.epsilon); break;
        case Annotator::Kind::Interactive:
            if (!interactive || interactive->kind != Annotator::Kind::Interactive) {
                throw ValidationError("an interactive config needs a live annotation channel");
            }
            annotator = *interactive;
            break;
    }

    const ModelContext ctx = ModelContext::build(g, result.plan.model_width, cfg.hyper.damping);
    Shared sh{cfg, data, result.plan, ctx, {}, {}};
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
        (result.plan.test_mask[v] ? sh.test_vertices : sh.train_vertices).push_back(static_cast<Index>(v));
    }

    std::vector<RepeatResult> per_repeat(cfg.repeats);
    const std::size_t workers = std::clamp<std::size_t>(cfg.threads, 1, cfg.repeats);
    if (workers == 1) {
        for (std::size_t r = 0; r < cfg.repeats; ++r) {
            per_repeat[r] = run_repeat(sh, r, annotator, hooks, nullptr);
            if (per_repeat[r].aborted) break;
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex hook_mutex;
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t r = next++; r < cfg.repeats; r = next++) {
                        per_repeat[r] = run_repeat(sh, r, annotator, hooks, &hook_mutex);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                    next = cfg.repeats;
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    for (auto& r : per_repeat) {
        result.records.insert(result.records.end(), r.records.begin(), r.records.end());
        if (r.aborted) {
            result.aborted = true;
            result.message = r.message;
        }
    }
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, load_dataset(cfg)); }

std::vector<SummaryRow> aggregate(const std::vector<RunRecord>& records) {
    using Key = std::tuple<int, int, int, bool, std::size_t>;
    struct Acc {
        std::vector<double> acc;
        double budget = 0.0;
        std::size_t n = 0;
    };
    std::map<Key, Acc> groups;
    for (const RunRecord& r : records) {
        if (!r.test_accuracy) continue;
        Acc& a = groups[Key{static_cast<int>(r.setting), static_cast<int>(r.model), static_cast<int>(r.sampler),
                            r.label_prop, r.round}];
        a.acc.push_back(*r.test_accuracy);
        a.budget += static_cast<double>(r.budget_used);
        ++a.n;
    }
    std::vector<SummaryRow> out;
    for (auto& [key, a] : groups) {
        // Sorting first makes the sums independent of record order.
        std::sort(a.acc.begin(), a.acc.end());
        SummaryRow row;
        row.setting = static_cast<Setting>(std::get<0>(key));
        row.model = static_cast<ModelKind>(std::get<1>(key));
        row.sampler = static_cast<SamplerKind>(std::get<2>(key));
        row.label_prop = std::get<3>(key);
        row.round = std::get<4>(key);
        row.count = a.n;
        row.budget_used = a.budget / static_cast<double>(a.n);
        row.mean = std::accumulate(a.acc.begin(), a.acc.end(), 0.0) / static_cast<double>(a.n);
        if (a.n > 1) {
            double ss = 0.0;
            for (double x : a.acc) ss += (x - row.mean) * (x - row.mean);
            row.stddev = std::sqrt(ss / static_cast<double>(a.n - 1));
        }
        out.push_back(row);
    }
    return out;
}

void write_csv(std::ostream& out, const std::vector<RunRecord>& records) {
    out << "run_id,seed,setting,model,sampler,label_prop,round,budget_used,test_accuracy,wall_ms\n";
    char acc[32];
    char ms[32];
    for (const RunRecord& r : records) {
        acc[0] = '\0';
        if (r.test_accuracy) std::snprintf(acc, sizeof acc, "%.6f", *r.test_accuracy);
        std::snprintf(ms, sizeof ms, "%.3f", r.wall_ms);
        out << r.run_id << ',' << r.seed << ',' << to_string(r.setting) << ',' << to_string(r.model) << ','
            << to_string(r.sampler) << ',' << (r.label_prop ? 1 : 0) << ',' << r.round << ',' << r.budget_used << ','
            << acc << ',' << ms << '\n';
    }
}

std::string summary_to_json(const std::vector<SummaryRow>& rows) {
    std::map<std::tuple<int, int, int, bool>, json> configs;
    for (const SummaryRow& r : rows) {
        json& c = configs[{static_cast<int>(r.setting), static_cast<int>(r.model), static_cast<int>(r.sampler),
                           r.label_prop}];
        if (c.is_null()) {
            c = {{"setting", to_string(r.setting)}, {"model", to_string(r.model)},
                 {"sampler", to_string(r.sampler)}, {"label_prop", r.label_prop},
                 {"rounds", json::array()},         {"budget_used", json::array()},
                 {"mean", json::array()},           {"std", json::array()},
                 {"count", json::array()}};
        }
        c["rounds"].push_back(r.round);
        c["budget_used"].push_back(r.budget_used);
        c["mean"].push_back(r.mean);
        c["std"].push_back(r.stddev);
        c["count"].push_back(r.count);
    }
    json out = {{"configurations", json::array()}};
    for (auto& [key, c] : configs) out["configurations"].push_back(std::move(c));
    return out.dump(2);
}

std::string records_to_json(const std::vector<RunRecord>& records) {
    json out = json::array();
    for (const RunRecord& r : records) {
        json j = {{"run_id", r.run_id},
                  {"seed", r.seed},
                  {"setting", to_string(r.setting)},
                  {"model", to_string(r.model)},
                  {"sampler", to_string(r.sampler)},
                  {"label_prop", r.label_prop},
                  {"round", r.round},
                  {"budget_used", r.budget_used},
                  {"wall_ms", r.wall_ms},
                  {"classes_covered", r.classes_covered},
                  {"pseudo_labels", r.pseudo_labels},
                  {"epochs", r.epochs}};
        if (r.test_accuracy) j["test_accuracy"] = *r.test_accuracy;
        out.push_back(std::move(j));
    }
    return out.dump();
}

}  // namespace coldstart
