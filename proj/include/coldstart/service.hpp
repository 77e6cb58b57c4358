#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "coldstart/experiment.hpp"

namespace httplib {
class Server;
}

namespace coldstart {

/// HTTP front end for one live interactive annotation session.
///
///   POST   /session          config (annotator "interactive") or {"resume_token": ...}
///   GET    /session/state    also served at /state
///   GET    /session/query    the batch awaiting labels
///   POST   /session/labels   {"labels": {vertex id: class name or index}}
///   GET    /session/metrics  records so far
///   DELETE /session          abort; returns a resume token
class AnnotationService {
public:
    AnnotationService();
    ~AnnotationService();
    AnnotationService(const AnnotationService&) = delete;
    AnnotationService& operator=(const AnnotationService&) = delete;

    /// Binds the listening socket; port 0 picks a free port. Returns the port.
    int bind(const std::string& host, int port);
    /// Serves until stop(). Call bind() first.
    void serve();
    void stop();

    /// Blocks until the session leaves the training state or the timeout passes.
    /// Returns the status string. Test helper.
    std::string wait_while_training(int timeout_ms);

private:
    enum class Status { Idle, AwaitingLabels, Training, Done };
    struct Session;

    void install_routes();
    std::string start_session(const std::string& body, int& http_status);
    std::string submit_labels(const std::string& body, int& http_status);
    std::string query_json(int& http_status);
    std::string state_json();
    std::string metrics_json(int& http_status);
    std::string abort_session(int& http_status);
    std::unique_ptr<Session> close_session(std::unique_lock<std::mutex>& lock);
    std::vector<int> await_labels(Session& s, const std::vector<Index>& batch);
    static std::string status_name(Status s);

    std::unique_ptr<httplib::Server> server_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::unique_ptr<Session> session_;
    struct Saved {
        ExperimentConfig cfg;
        std::vector<std::vector<int>> batches;
        std::vector<std::string> classes;
    };
    std::map<std::string, Saved> saved_;
    std::uint64_t counter_ = 0;
};

}  // namespace coldstart
