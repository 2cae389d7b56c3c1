#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "tmem/engine.hpp"

namespace httplib {
class Server;
}

namespace tmem {

// Background extraction jobs: queued -> running -> done | failed.
struct JobRecord {
    std::string id;
    std::string kind;
    std::string state = "queued";
    nlohmann::json result;
    std::string error;
};

class JobQueue {
public:
    JobQueue();
    ~JobQueue();

    std::string submit(const std::string& kind, std::function<nlohmann::json()> work);
    std::optional<JobRecord> get(const std::string& id) const;

    // Blocks until everything submitted so far has finished (used by tests).
    void drain();

private:
    void run();

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable idle_cv_;
    std::deque<std::pair<std::string, std::function<nlohmann::json()>>> pending_;
    std::map<std::string, JobRecord> jobs_;
    int active_ = 0;
    std::uint64_t next_id_ = 1;
    bool stopping_ = false;
    std::thread worker_;
};

struct ServiceConfig {
    std::string bind_host = "127.0.0.1";
    int port = 8080;
    std::string log_path; // empty = stderr
};

// HTTP/JSON facade over the engine; adds no semantics of its own.
//   POST /v1/trajectories[?extract=task|subtask|both]
//   GET  /v1/jobs/{id}
//   POST /v1/retrieve
//   POST /v1/consolidate            (409 while another run is active)
//   GET  /v1/tips, /v1/tips/{id}, /v1/stats
class Service {
public:
    Service(Engine& engine, ServiceConfig cfg = {});
    ~Service();

    void mount(httplib::Server& server);

    // Binds and serves until stop(); returns the bound port immediately via
    // start() for tests.
    int start();
    void stop();
    int port() const { return bound_port_; }

    JobQueue& jobs() { return jobs_; }

private:
    void log_request(const std::string& line);

    Engine& engine_;
    ServiceConfig cfg_;
    JobQueue jobs_;
    std::atomic<bool> consolidating_{false};
    std::unique_ptr<httplib::Server> server_;
    std::thread server_thread_;
    int bound_port_ = 0;
    std::mutex log_mu_;
};

} // namespace tmem
