#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <chrono>
#include <fstream>
#include <iostream>

#include "tmem/errors.hpp"
#include "tmem/json_io.hpp"
#include "tmem/service.hpp"

namespace tmem {

using nlohmann::json;

JobQueue::JobQueue() : worker_([this] { run(); }) {}

JobQueue::~JobQueue() {
    {
        std::lock_guard<std::mutex> lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
}

std::string JobQueue::submit(const std::string& kind, std::function<json()> work) {
    std::lock_guard<std::mutex> lock(mu_);
    std::string id = "job-" + std::to_string(next_id_++);
    jobs_[id] = JobRecord{id, kind, "queued", json(), ""};
    pending_.emplace_back(id, std::move(work));
    cv_.notify_one();
    return id;
}

std::optional<JobRecord> JobQueue::get(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second;
}

void JobQueue::drain() {
    std::unique_lock<std::mutex> lock(mu_);
    idle_cv_.wait(lock, [this] { return pending_.empty() && active_ == 0; });
}

void JobQueue::run() {
    for (;;) {
        std::pair<std::string, std::function<json()>> item;
        {
            std::unique_lock<std::mutex> lock(mu_);
            cv_.wait(lock, [this] { return stopping_ || !pending_.empty(); });
            if (stopping_ && pending_.empty()) return;
            item = std::move(pending_.front());
            pending_.pop_front();
            ++active_;
            jobs_[item.first].state = "running";
        }
        json result;
        std::string error;
        try {
            result = item.second();
        } catch (const std::exception& e) {
            error = e.what();
        }
        {
            std::lock_guard<std::mutex> lock(mu_);
            JobRecord& record = jobs_[item.first];
            if (error.empty()) {
                record.state = "done";
                record.result = result;
            } else {
                record.state = "failed";
                record.error = error;
            }
            --active_;
        }
        idle_cv_.notify_all();
    }
}

namespace {

json job_to_json(const JobRecord& record) {
    json j{{"id", record.id}, {"kind", record.kind}, {"state", record.state}};
    if (record.state == "done") j["result"] = record.result;
    if (record.state == "failed") j["error"] = record.error;
    return j;
}

void reply_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
    reply_json(res, status, json{{"error", message}});
}

int status_for(const Error& e) {
    if (e.code() == ErrorCode::duplicate_id) return 409;
    if (e.code() == ErrorCode::invalid_threshold) return 422;
    if (is_validation_error(e.code())) return 400;
    if (is_gateway_error(e.code())) return 502;
    return 500;
}

} // namespace

Service::Service(Engine& engine, ServiceConfig cfg) : engine_(engine), cfg_(std::move(cfg)) {}

Service::~Service() { stop(); }

void Service::log_request(const std::string& line) {
    std::lock_guard<std::mutex> lock(log_mu_);
    if (cfg_.log_path.empty()) {
        std::cerr << line << "\n";
        return;
    }
    std::ofstream out(cfg_.log_path, std::ios::app);
    out << line << "\n";
}

void Service::mount(httplib::Server& server) {
    server.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
        json line{{"ts", format_rfc3339(SystemClock().now())},
                  {"method", req.method},
                  {"path", req.path},
                  {"status", res.status}};
        log_request(line.dump());
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                                    std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const Error& e) {
            reply_error(res, status_for(e), e.what());
        } catch (const std::exception& e) {
            reply_error(res, 500, e.what());
        }
    });

    server.Post("/v1/trajectories", [this](const httplib::Request& req, httplib::Response& res) {
        json doc = json::parse(req.body, nullptr, false);
        if (doc.is_discarded()) {
            reply_error(res, 400, "body is not valid JSON");
            return;
        }
        ExtractMode mode = ExtractMode::none;
        if (req.has_param("extract")) {
            std::string raw = req.get_param_value("extract");
            try {
                mode = extract_mode_from_string(raw);
            } catch (const Error&) {
                reply_error(res, 400, "extract must be task, subtask or both");
                return;
            }
        }
        PutResult put = engine_.put_trajectory_doc(doc);
        json body{{"id", put.id}, {"revision", put.revision}};
        if (mode != ExtractMode::none) {
            std::string id = put.id;
            body["job_id"] = jobs_.submit("extract", [this, id, mode] {
                return to_json(engine_.extract_tips(id, mode));
            });
        }
        reply_json(res, 201, body);
    });

    server.Get(R"(/v1/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        auto record = jobs_.get(req.matches[1]);
        if (!record) {
            reply_error(res, 404, "unknown job");
            return;
        }
        reply_json(res, 200, job_to_json(*record));
    });

    server.Post("/v1/retrieve", [this](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) {
            reply_error(res, 400, "body is not valid JSON");
            return;
        }
        std::string task = body.value("task_description", "");
        if (task.empty()) {
            reply_error(res, 400, "task_description is required");
            return;
        }
        std::optional<RetrievalStrategy> strategy;
        if (body.contains("strategy") && body["strategy"].is_string()) {
            strategy = retrieval_strategy_from_string(body["strategy"].get<std::string>());
        }
        std::optional<double> tau;
        if (body.contains("tau") && body["tau"].is_number()) tau = body["tau"].get<double>();
        std::optional<int> k;
        if (body.contains("k") && body["k"].is_number_integer()) k = body["k"].get<int>();
        if ((tau && (!(*tau > 0.0) || *tau > 1.0)) || (k && *k < 1)) {
            reply_error(res, 422, "tau must be in (0,1] and k >= 1");
            return;
        }
        RetrievalResult result = engine_.retrieve_with_defaults(task, strategy, tau, k);
        reply_json(res, 200, json{{"result", to_json(result)},
                                  {"rendered", render_guidelines(result)}});
    });

    server.Post("/v1/consolidate", [this](const httplib::Request& req, httplib::Response& res) {
        bool expected = false;
        if (!consolidating_.compare_exchange_strong(expected, true)) {
            reply_error(res, 409, "a consolidation run is already in progress");
            return;
        }
        struct Release {
            std::atomic<bool>& flag;
            ~Release() { flag = false; }
        } release{consolidating_};

        std::optional<double> threshold;
        if (!req.body.empty()) {
            json body = json::parse(req.body, nullptr, false);
            if (!body.is_discarded() && body.is_object() && body.contains("threshold") &&
                body["threshold"].is_number()) {
                threshold = body["threshold"].get<double>();
            }
        }
        ConsolidationReport report = engine_.consolidate(threshold);
        reply_json(res, 200, to_json(report));
    });

    server.Get("/v1/tips", [this](const httplib::Request& req, httplib::Response& res) {
        MetadataFilter filter;
        if (req.has_param("category")) {
            filter.category = tip_category_from_string(req.get_param_value("category"));
        }
        if (req.has_param("priority")) {
            filter.priority = priority_from_string(req.get_param_value("priority"));
        }
        if (req.has_param("application_context")) {
            filter.application_context = req.get_param_value("application_context");
        }
        if (req.has_param("task_category")) {
            filter.task_category = req.get_param_value("task_category");
        }
        if (req.has_param("granularity")) {
            filter.granularity = granularity_from_string(req.get_param_value("granularity"));
        }
        if (req.has_param("generic_only")) {
            filter.generic_only = req.get_param_value("generic_only") == "true";
        }
        reply_json(res, 200, json{{"tips", engine_.list_tips(filter)}});
    });

    server.Get(R"(/v1/tips/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            reply_json(res, 200, engine_.tip_as_json(req.matches[1]));
        } catch (const Error&) {
            reply_error(res, 404, "unknown tip");
        }
    });

    server.Get("/v1/stats", [this](const httplib::Request&, httplib::Response& res) {
        reply_json(res, 200, engine_.stats());
    });
}

int Service::start() {
    server_ = std::make_unique<httplib::Server>();
    mount(*server_);
    if (cfg_.port == 0) {
        bound_port_ = server_->bind_to_any_port(cfg_.bind_host);
    } else {
        if (!server_->bind_to_port(cfg_.bind_host, cfg_.port)) {
            throw Error(ErrorCode::io_error, "cannot bind " + cfg_.bind_host + ":" +
                                                 std::to_string(cfg_.port));
        }
        bound_port_ = cfg_.port;
    }
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound_port_;
}

void Service::stop() {
    if (server_) server_->stop();
    if (server_thread_.joinable()) server_thread_.join();
    server_.reset();
}

} // namespace tmem
