// Command-line driver: runs experiments or serves the annotation API.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "coldstart/error.hpp"
#include "coldstart/experiment.hpp"
#include "coldstart/service.hpp"

namespace {

using namespace coldstart;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active few-shot vertex classification on cold-start graphs"};
    app.set_version_flag("--version", "coldstart 0.1.0");

    std::string config_path, dataset, model, sampler, setting, annotator, data_dir, out_dir, host = "127.0.0.1";
    std::size_t budget = 0, rounds = 0, repeats = 0, quota = 0, hidden = 0, lp_hops = 0, threads = 0;
    std::size_t num_classes = 0, max_epochs = 0, patience = 0;
    std::uint64_t seed = 0, split_seed = 0;
    double epsilon = 0, alpha = 0, entropy_threshold = 0, lambda = 0, lr = 0, dropout = 0, weight_decay = 0;
    double test_fraction = 0;
    std::size_t sbm_vertices = 0, sbm_classes = 0, sbm_dim = 0;
    double sbm_p_in = 0, sbm_p_out = 0, sbm_shift = 0;
    bool label_prop = false, serve = false, timing = false;
    int port = 8080;

    app.add_option("--config", config_path, "JSON config file; flags override its fields")->check(CLI::ExistingFile);
    app.add_option("--dataset", dataset, "cora | citeseer | pubmed | sbm | json:<path>");
    app.add_option("--data-dir", data_dir, "directory with <name>.content and <name>.cites");
    app.add_option("--model", model, "classifier")->check(CLI::IsMember({"gcn", "gpn", "lp"}));
    app.add_option("--sampler", sampler, "selection strategy")
        ->check(CLI::IsMember({"random", "entropy", "pagerank", "medoid", "featprop"}));
    app.add_option("--setting", setting, "experiment setting")
        ->check(CLI::IsMember({"balanced", "unbalanced", "unknown-k"}));
    app.add_flag("--label-prop", label_prop, "extend the training set with propagated pseudo-labels");
    app.add_option("--budget", budget, "total human labels (default rounds * classes * quota)");
    app.add_option("--rounds", rounds, "sampling rounds (default 5)");
    app.add_option("--quota", quota, "labels per cell and round (default 1)")->check(CLI::PositiveNumber);
    app.add_option("--repeats", repeats, "independent repeats (default 1)")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "base seed");
    app.add_option("--split-seed", split_seed, "seed of the held-out test split");
    app.add_option("--test-fraction", test_fraction, "held-out fraction per class (default 0.2)");
    app.add_option("--annotator", annotator, "oracle | noisy | interactive (noisy when --epsilon > 0)")
        ->check(CLI::IsMember({"oracle", "noisy", "interactive"}));
    app.add_option("--epsilon", epsilon, "noisy annotator error rate")->check(CLI::Range(0.0, 1.0));
    app.add_option("--alpha", alpha, "label propagation retention");
    app.add_option("--entropy-threshold", entropy_threshold, "pseudo-label entropy cutoff");
    app.add_option("--lambda", lambda, "prototype regularizer weight");
    app.add_option("--lr", lr, "Adam learning rate");
    app.add_option("--weight-decay", weight_decay, "L2 weight decay");
    app.add_option("--hidden", hidden, "hidden width");
    app.add_option("--dropout", dropout, "dropout rate");
    app.add_option("--lp-hops", lp_hops, "label propagation hops");
    app.add_option("--max-epochs", max_epochs, "training epoch cap");
    app.add_option("--patience", patience, "early stopping patience");
    app.add_option("--num-classes", num_classes, "class count for unlabeled graphs");
    app.add_option("--sbm-vertices", sbm_vertices, "synthetic graph size");
    app.add_option("--sbm-classes", sbm_classes, "synthetic block count");
    app.add_option("--sbm-p-in", sbm_p_in, "intra-block edge probability");
    app.add_option("--sbm-p-out", sbm_p_out, "inter-block edge probability");
    app.add_option("--sbm-dim", sbm_dim, "synthetic feature dimension");
    app.add_option("--sbm-shift", sbm_shift, "synthetic class mean separation");
    app.add_option("--threads", threads, "worker threads over repeats")->check(CLI::PositiveNumber);
    app.add_flag("--timing", timing, "record wall-clock times (breaks byte-identical replays)");
    app.add_option("--out", out_dir, "write records.csv, summary.json and config.json here");
    app.add_flag("--serve", serve, "start the annotation HTTP service");
    app.add_option("--host", host, "service bind address");
    app.add_option("--port", port, "service port")->check(CLI::Range(0, 65535));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    if (serve) {
        try {
            AnnotationService service;
            const int bound = service.bind(host, port);
            std::cerr << "annotation service listening on http://" << host << ':' << bound << '\n';
            service.serve();
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
        return 0;
    }

    try {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : config_from_json(slurp(config_path));
        auto given = [&](const char* name) { return app.count(name) > 0; };
        if (given("--dataset")) cfg.dataset = dataset;
        if (given("--data-dir")) cfg.data_dir = data_dir;
        if (given("--model")) cfg.model = parse_model_kind(model);
        if (given("--sampler")) cfg.sampler = parse_sampler(sampler);
        if (given("--setting")) cfg.setting = parse_setting(setting);
        if (given("--label-prop")) cfg.label_prop = label_prop;
        if (given("--budget")) cfg.budget = budget;
        if (given("--rounds")) cfg.rounds = rounds;
        if (given("--quota")) cfg.quota = quota;
        if (given("--repeats")) cfg.repeats = repeats;
        if (given("--seed")) cfg.seed = seed;
        if (given("--split-seed")) cfg.split_seed = split_seed;
        if (given("--test-fraction")) cfg.test_fraction = test_fraction;
        if (given("--epsilon")) {
            cfg.annotator.epsilon = epsilon;
            if (epsilon > 0.0) cfg.annotator.kind = Annotator::Kind::Noisy;
        }
        if (given("--annotator")) {
            cfg.annotator.kind = annotator == "noisy"         ? Annotator::Kind::Noisy
                                 : annotator == "interactive" ? Annotator::Kind::Interactive
                                                              : Annotator::Kind::Oracle;
        }
        if (given("--alpha")) cfg.hyper.alpha = alpha;
        if (given("--entropy-threshold")) cfg.hyper.entropy_threshold = entropy_threshold;
        if (given("--lambda")) cfg.hyper.lambda = lambda;
        if (given("--lr")) cfg.hyper.lr = lr;
        if (given("--weight-decay")) cfg.hyper.weight_decay = weight_decay;
        if (given("--hidden")) cfg.hyper.hidden = hidden;
        if (given("--dropout")) cfg.hyper.dropout = dropout;
        if (given("--lp-hops")) cfg.hyper.lp_hops = lp_hops;
        if (given("--max-epochs")) cfg.hyper.max_epochs = max_epochs;
        if (given("--patience")) cfg.hyper.patience = patience;
        if (given("--num-classes")) cfg.num_classes = num_classes;
        if (given("--sbm-vertices")) cfg.sbm.num_vertices = sbm_vertices;
        if (given("--sbm-classes")) cfg.sbm.num_classes = sbm_classes;
        if (given("--sbm-p-in")) cfg.sbm.p_in = sbm_p_in;
        if (given("--sbm-p-out")) cfg.sbm.p_out = sbm_p_out;
        if (given("--sbm-dim")) cfg.sbm.feature_dim = sbm_dim;
        if (given("--sbm-shift")) cfg.sbm.feature_shift = sbm_shift;
        if (given("--threads")) cfg.threads = threads;
        if (given("--timing")) cfg.record_timing = timing;
        validate(cfg);
        if (cfg.annotator.kind == Annotator::Kind::Interactive) {
            throw ValidationError("interactive runs go through --serve");
        }

        const ExperimentResult result = run_experiment(cfg);
        if (out_dir.empty()) {
            write_csv(std::cout, result.records);
        } else {
            const std::filesystem::path dir(out_dir);
            std::filesystem::create_directories(dir);
            std::ostringstream csv;
            write_csv(csv, result.records);
            write_file(dir / "records.csv", csv.str());
            write_file(dir / "summary.json", summary_to_json(aggregate(result.records)) + "\n");
            write_file(dir / "config.json", config_to_json(cfg) + "\n");
            std::cerr << "wrote " << result.records.size() << " records to " << dir.string() << '\n';
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
