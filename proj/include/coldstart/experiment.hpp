#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "coldstart/active.hpp"
#include "coldstart/dataset.hpp"
#include "coldstart/graph.hpp"
#include "coldstart/models.hpp"

namespace coldstart {

struct AnnotatorSpec {
    Annotator::Kind kind = Annotator::Kind::Oracle;
    double epsilon = 0.0;
};

/// Everything needed to reproduce a run.
struct ExperimentConfig {
    /// cora | citeseer | pubmed | sbm | json:<path>
    std::string dataset = "sbm";
    /// Directory holding <name>.content and <name>.cites for text datasets.
    std::string data_dir;
    SbmParams sbm;
    /// Row L1 normalization of the features; defaults to on for text datasets only.
    std::optional<bool> normalize_features;

    ModelKind model = ModelKind::Gpn;
    SamplerKind sampler = SamplerKind::Random;
    Setting setting = Setting::Balanced;
    bool label_prop = false;

    /// Total human labels. When absent: rounds * |C| * quota.
    std::optional<std::size_t> budget;
    std::size_t rounds = 5;
    std::size_t quota = 1;
    std::size_t repeats = 1;
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 0;
    double test_fraction = 0.2;

    AnnotatorSpec annotator;
    HyperParams hyper;

    /// Class count for graphs without ground truth (interactive sessions).
    std::optional<std::size_t> num_classes;
    /// Class names offered to a human annotator; defaults to the dataset's names.
    std::vector<std::string> class_names;

    std::size_t featprop_hops = 2;
    std::size_t estimate_hops = 2;
    std::size_t estimate_k_max = 100;
    std::size_t estimate_n_init = 1;

    std::size_t threads = 1;
    /// Write real wall-clock times; off keeps replays byte-identical.
    bool record_timing = false;
};

std::string config_to_json(const ExperimentConfig& cfg);
/// Missing fields keep their defaults. Throws ValidationError on bad values.
ExperimentConfig config_from_json(const std::string& text);
void validate(const ExperimentConfig& cfg);

struct Dataset {
    Graph graph;
    std::vector<std::string> vertex_ids;
};

Dataset load_dataset(const ExperimentConfig& cfg);

struct RunRecord {
    std::size_t run_id = 0;
    std::uint64_t seed = 0;
    Setting setting = Setting::Balanced;
    ModelKind model = ModelKind::Gpn;
    SamplerKind sampler = SamplerKind::Random;
    bool label_prop = false;
    std::size_t round = 0;
    std::size_t budget_used = 0;
    std::optional<double> test_accuracy;
    double wall_ms = 0.0;
    std::size_t classes_covered = 0;
    std::size_t pseudo_labels = 0;
    std::size_t epochs = 0;
    bool regularizers_disabled = false;
    bool pagerank_converged = true;
};

/// Derived quantities of a configuration on a concrete dataset.
struct RunPlan {
    std::size_t num_classes = 0;  // |C| as known to the annotator
    std::size_t draws_per_round = 0;
    std::size_t cells = 0;        // k per round
    std::size_t model_width = 0;  // output columns
    std::size_t budget = 0;
    std::size_t rounds = 0;
    std::optional<std::size_t> estimated_k;
    std::vector<char> test_mask;
};

RunPlan plan_run(const ExperimentConfig& cfg, const Dataset& data);

/// Stratified test split: round(fraction * |class|) vertices per class, or a
/// plain random fraction without labels.
std::vector<char> test_split(const Graph& g, double fraction, std::uint64_t seed);

struct RunHooks {
    std::function<void(const RunRecord&)> on_record;
    /// Called after every annotation batch.
    std::function<void(std::size_t round, std::size_t budget_used)> on_progress;
    std::function<void(const RunPlan&)> on_plan;
    /// Current model output, before each selection round and after the last.
    std::function<void(const ModelOutput&)> on_model;
};

struct ExperimentResult {
    std::vector<RunRecord> records;
    RunPlan plan;
    bool aborted = false;
    std::string message;
};

/// Runs every repeat of the loop select -> annotate -> propagate -> train ->
/// evaluate. An interactive annotator must be supplied for interactive configs.
/// Repeats run on up to cfg.threads workers and are merged in repeat order.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data,
                                const Annotator* interactive = nullptr, const RunHooks& hooks = {});
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct SummaryRow {
    Setting setting = Setting::Balanced;
    ModelKind model = ModelKind::Gpn;
    SamplerKind sampler = SamplerKind::Random;
    bool label_prop = false;
    std::size_t round = 0;
    double budget_used = 0.0;
    double mean = 0.0;
    /// Sample standard deviation; 0 for a single repeat.
    double stddev = 0.0;
    std::size_t count = 0;
};

/// Mean and sample std of test accuracy per (setting, model, sampler, lp, round).
std::vector<SummaryRow> aggregate(const std::vector<RunRecord>& records);

void write_csv(std::ostream& out, const std::vector<RunRecord>& records);
std::string summary_to_json(const std::vector<SummaryRow>& rows);
std::string records_to_json(const std::vector<RunRecord>& records);

}  // namespace coldstart
