#include "coldstart/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <deque>
#include <random>

#include <httplib.h>
#include <json.hpp>

#include "coldstart/error.hpp"

namespace coldstart {

using nlohmann::json;

struct AnnotationService::Session {
    std::string id;
    ExperimentConfig cfg;
    Dataset data;
    Status status = Status::Training;
    std::size_t budget_total = 0;
    std::size_t budget_used = 0;
    std::size_t current_round = 0;
    std::size_t model_width = 0;
    std::vector<RunRecord> records;
    DenseMatrix distribution;
    std::vector<Index> pending;
    std::optional<std::vector<int>> supplied;
    std::vector<int> human;
    std::vector<std::string> classes;
    bool allow_new_class = false;
    std::vector<std::vector<int>> log;
    std::deque<std::vector<int>> replay;
    bool abort = false;
    std::string error;
    std::thread worker;
};

namespace {

std::string fresh_token(std::uint64_t counter) {
    static std::mt19937_64 rng{std::random_device{}()};
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04llx%016llx", static_cast<unsigned long long>(counter & 0xffff),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

std::string error_body(const std::string& message) { return json{{"error", message}}.dump(); }

DenseMatrix row_distribution(const DenseMatrix& logits) {
    DenseMatrix out(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        double mass = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j) mass += std::max(logits(i, j), 0.0);
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            out(i, j) = mass > 0.0 ? std::max(logits(i, j), 0.0) / mass : 1.0 / static_cast<double>(logits.cols());
        }
    }
    return out;
}

}  // namespace

AnnotationService::AnnotationService() : server_(std::make_unique<httplib::Server>()) { install_routes(); }

AnnotationService::~AnnotationService() {
    stop();
    std::unique_lock<std::mutex> lock(mutex_);
    close_session(lock);
}

int AnnotationService::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    if (!server_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void AnnotationService::serve() { server_->listen_after_bind(); }

void AnnotationService::stop() { server_->stop(); }

std::string AnnotationService::status_name(Status s) {
    switch (s) {
        case Status::Idle: return "idle";
        case Status::AwaitingLabels: return "awaiting_labels";
        case Status::Training: return "training";
        case Status::Done: return "done";
    }
    return "?";
}

std::string AnnotationService::wait_while_training(int timeout_ms) {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait_for(lock, std::chrono::milliseconds(timeout_ms),
                 [&] { return !session_ || session_->status != Status::Training; });
    return status_name(session_ ? session_->status : Status::Idle);
}

void AnnotationService::install_routes() {
    auto reply = [](httplib::Response& res, int status, const std::string& body) {
        res.status = status;
        res.set_content(body, "application/json");
    };
    server_->Post("/session", [this, reply](const httplib::Request& req, httplib::Response& res) {
        int status = 200;
        const std::string body = start_session(req.body, status);
        reply(res, status, body);
    });
    auto state = [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, 200, state_json()); };
    server_->Get("/session/state", state);
    server_->Get("/state", state);
    server_->Get("/session/query", [this, reply](const httplib::Request&, httplib::Response& res) {
        int status = 200;
        const std::string body = query_json(status);
        reply(res, status, body);
    });
    server_->Post("/session/labels", [this, reply](const httplib::Request& req, httplib::Response& res) {
        int status = 200;
        const std::string body = submit_labels(req.body, status);
        reply(res, status, body);
    });
    server_->Get("/session/metrics", [this, reply](const httplib::Request&, httplib::Response& res) {
        int status = 200;
        const std::string body = metrics_json(status);
        reply(res, status, body);
    });
    server_->Delete("/session", [this, reply](const httplib::Request&, httplib::Response& res) {
        int status = 200;
        const std::string body = abort_session(status);
        reply(res, status, body);
    });
}

std::vector<int> AnnotationService::await_labels(Session& s, const std::vector<Index>& batch) {
    std::unique_lock<std::mutex> lock(mutex_);
    if (s.abort) throw SessionAborted("session closed");
    s.current_round = s.records.empty() ? 1 : s.records.back().round + 1;
    std::vector<int> labels;
    if (!s.replay.empty()) {
        labels = std::move(s.replay.front());
        s.replay.pop_front();
        if (labels.size() != batch.size()) throw SessionAborted("resume log does not match the replayed run");
    } else {
        s.pending = batch;
        s.supplied.reset();
        s.status = Status::AwaitingLabels;
        cv_.notify_all();
        cv_.wait(lock, [&] { return s.abort || s.supplied.has_value(); });
        if (s.abort) throw SessionAborted("session closed");
        labels = std::move(*s.supplied);
        s.supplied.reset();
        s.pending.clear();
    }
    for (std::size_t i = 0; i < batch.size(); ++i) s.human[static_cast<std::size_t>(batch[i])] = labels[i];
    s.log.push_back(labels);
    s.status = Status::Training;
    cv_.notify_all();
    return labels;
}

std::string AnnotationService::start_session(const std::string& body, int& http_status) {
    ExperimentConfig cfg;
    std::vector<std::vector<int>> replay;
    std::vector<std::string> resumed_classes;
    bool resumed = false;
    try {
        const json j = json::parse(body);
        if (j.is_object() && j.contains("resume_token")) {
            std::lock_guard<std::mutex> lock(mutex_);
            const auto it = saved_.find(j.at("resume_token").get<std::string>());
            if (it == saved_.end()) {
                http_status = 404;
                return error_body("unknown resume token");
            }
            cfg = it->second.cfg;
            replay = it->second.batches;
            resumed_classes = it->second.classes;
            resumed = true;
        } else {
            cfg = config_from_json(body);
        }
    } catch (const json::exception& e) {
        http_status = 400;
        return error_body(std::string("invalid JSON: ") + e.what());
    } catch (const Error& e) {
        http_status = 400;
        return error_body(e.what());
    }
    if (cfg.annotator.kind != Annotator::Kind::Interactive) {
        http_status = 400;
        return error_body("sessions need annotator \"interactive\"");
    }

    auto s = std::make_unique<Session>();
    try {
        s->data = load_dataset(cfg);
    } catch (const std::exception& e) {
        http_status = 400;
        return error_body(e.what());
    }
    const Graph& g = s->data.graph;
    s->cfg = cfg;
    s->human.assign(g.num_vertices(), -1);
    s->replay.assign(replay.begin(), replay.end());
    s->allow_new_class = cfg.setting == Setting::UnknownK;
    if (resumed) {
        s->classes = resumed_classes;
    } else if (!cfg.class_names.empty()) {
        s->classes = cfg.class_names;
    } else if (!s->allow_new_class) {
        const std::size_t c = cfg.num_classes.value_or(g.num_classes());
        for (std::size_t i = 0; i < c; ++i) s->classes.push_back(i < g.num_classes() ? g.class_name(i) : "class " + std::to_string(i));
    }

    std::unique_lock<std::mutex> lock(mutex_);
    if (session_ && session_->status != Status::Done) {
        http_status = 409;
        return error_body("a session is already running");
    }
    close_session(lock);
    s->id = fresh_token(++counter_);
    session_ = std::move(s);
    Session* sp = session_.get();

    sp->worker = std::thread([this, sp] {
        RunHooks hooks;
        hooks.on_plan = [this, sp](const RunPlan& plan) {
            std::lock_guard<std::mutex> l(mutex_);
            sp->budget_total = plan.budget;
            sp->model_width = plan.model_width;
        };
        hooks.on_record = [this, sp](const RunRecord& r) {
            std::lock_guard<std::mutex> l(mutex_);
            sp->records.push_back(r);
            sp->budget_used = r.budget_used;
            sp->current_round = r.round;
        };
        hooks.on_model = [this, sp](const ModelOutput& out) {
            DenseMatrix d = row_distribution(out.logits);
            std::lock_guard<std::mutex> l(mutex_);
            sp->distribution = std::move(d);
        };
        const Annotator annotator =
            Annotator::interactive([this, sp](const std::vector<Index>& batch) { return await_labels(*sp, batch); });
        std::string error;
        try {
            const ExperimentResult r = run_experiment(sp->cfg, sp->data, &annotator, hooks);
            if (r.aborted) error = r.message;
        } catch (const std::exception& e) {
            error = e.what();
        }
        std::lock_guard<std::mutex> l(mutex_);
        sp->error = error;
        sp->status = Status::Done;
        sp->pending.clear();
        cv_.notify_all();
    });
    return json{{"session_id", sp->id}}.dump();
}

std::unique_ptr<AnnotationService::Session> AnnotationService::close_session(std::unique_lock<std::mutex>& lock) {
    if (!session_) return nullptr;
    std::unique_ptr<Session> s = std::move(session_);
    s->abort = true;
    cv_.notify_all();
    if (s->worker.joinable()) {
        lock.unlock();
        s->worker.join();
        lock.lock();
    }
    return s;
}

std::string AnnotationService::state_json() {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!session_) {
        return json{{"status", "idle"}, {"budget_used", 0}, {"budget_total", 0}, {"current_round", 0}}.dump();
    }
    const Session& s = *session_;
    json j = {{"status", status_name(s.status)},   {"session_id", s.id},
              {"budget_used", s.budget_used},      {"budget_total", s.budget_total},
              {"current_round", s.current_round}};
    if (!s.error.empty()) j["error"] = s.error;
    return j.dump();
}

std::string AnnotationService::query_json(int& http_status) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!session_) {
        http_status = 404;
        return error_body("no session");
    }
    const Session& s = *session_;
    if (s.status != Status::AwaitingLabels) {
        http_status = 409;
        return error_body("no batch is awaiting labels (status " + status_name(s.status) + ")");
    }
    const Graph& g = s.data.graph;
    json vertices = json::array();
    for (Index v : s.pending) {
        const auto row = g.features().row(static_cast<std::size_t>(v));
        std::vector<std::size_t> nz;
        for (std::size_t f = 0; f < row.size(); ++f)
            if (row[f] != 0.0) nz.push_back(f);
        std::stable_sort(nz.begin(), nz.end(),
                         [&](std::size_t a, std::size_t b) { return std::abs(row[a]) > std::abs(row[b]); });
        if (nz.size() > 10) nz.resize(10);
        json features = json::array();
        for (std::size_t f : nz) features.push_back({{"index", f}, {"value", row[f]}});

        json neighbors = json::array();
        for (Index u : g.neighbors(v)) {
            json nb = {{"index", u}, {"id", s.data.vertex_ids[static_cast<std::size_t>(u)]}};
            const int l = s.human[static_cast<std::size_t>(u)];
            nb["label"] = l >= 0 && static_cast<std::size_t>(l) < s.classes.size() ? json(s.classes[static_cast<std::size_t>(l)])
                                                                                       : json(nullptr);
            neighbors.push_back(std::move(nb));
        }
        json dist = json::array();
        if (static_cast<std::size_t>(v) < s.distribution.rows()) {
            for (double p : s.distribution.row(static_cast<std::size_t>(v))) dist.push_back(p);
        }
        vertices.push_back({{"index", v},
                            {"id", s.data.vertex_ids[static_cast<std::size_t>(v)]},
                            {"features", std::move(features)},
                            {"neighbors", std::move(neighbors)},
                            {"class_distribution", std::move(dist)}});
    }
    json out = {{"round", s.current_round}, {"vertices", std::move(vertices)}, {"classes", s.classes}};
    if (s.allow_new_class) {
        out["allow_new_class"] = true;
        out["class_capacity"] = s.model_width;
    }
    return out.dump();
}

std::string AnnotationService::submit_labels(const std::string& body, int& http_status) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        http_status = 400;
        return error_body(std::string("invalid JSON: ") + e.what());
    }
    const json& labels = j.is_object() && j.contains("labels") ? j["labels"] : j;
    std::lock_guard<std::mutex> lock(mutex_);
    if (!session_) {
        http_status = 404;
        return error_body("no session");
    }
    Session& s = *session_;
    if (s.status != Status::AwaitingLabels) {
        http_status = 409;
        return error_body("labels are not accepted while " + status_name(s.status));
    }
    if (!labels.is_object()) {
        http_status = 400;
        return error_body("labels must map vertex ids to classes");
    }
    if (labels.size() != s.pending.size()) {
        http_status = 400;
        return error_body("expected labels for exactly " + std::to_string(s.pending.size()) + " vertices");
    }
    std::vector<std::string> classes = s.classes;
    std::vector<std::string> added;
    std::vector<int> out;
    for (Index v : s.pending) {
        const std::string& id = s.data.vertex_ids[static_cast<std::size_t>(v)];
        if (!labels.contains(id)) {
            http_status = 400;
            return error_body("missing label for vertex " + id);
        }
        const json& value = labels[id];
        int label = -1;
        if (value.is_number_integer()) {
            const auto x = value.get<long long>();
            if (x < 0 || static_cast<std::size_t>(x) >= classes.size()) {
                http_status = 400;
                return error_body("class index " + std::to_string(x) + " is out of range");
            }
            label = static_cast<int>(x);
        } else if (value.is_string()) {
            const std::string name = value.get<std::string>();
            const auto it = std::find(classes.begin(), classes.end(), name);
            if (it != classes.end()) {
                label = static_cast<int>(it - classes.begin());
            } else if (s.allow_new_class && !name.empty() && classes.size() < s.model_width) {
                classes.push_back(name);
                added.push_back(name);
                label = static_cast<int>(classes.size() - 1);
            } else {
                http_status = 400;
                return error_body(s.allow_new_class ? "cannot add class '" + name + "'" : "unknown class '" + name + "'");
            }
        } else {
            http_status = 400;
            return error_body("labels must be class names or indices");
        }
        out.push_back(label);
    }
    s.classes = std::move(classes);
    s.supplied = std::move(out);
    s.status = Status::Training;
    cv_.notify_all();
    return json{{"accepted", true}, {"new_classes", added}}.dump();
}

std::string AnnotationService::metrics_json(int& http_status) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!session_) {
        http_status = 404;
        return error_body("no session");
    }
    return json{{"records", json::parse(records_to_json(session_->records))}}.dump();
}

std::string AnnotationService::abort_session(int& http_status) {
    std::unique_lock<std::mutex> lock(mutex_);
    if (!session_) {
        http_status = 404;
        return error_body("no session");
    }
    const std::unique_ptr<Session> s = close_session(lock);
    const std::string token = fresh_token(++counter_);
    saved_[token] = Saved{s->cfg, s->log, s->classes};
    return json{{"aborted", true},
                {"resume_token", token},
                {"labels_submitted", s->budget_used},
                {"records", json::parse(records_to_json(s->records))}}
        .dump();
}

}  // namespace coldstart
