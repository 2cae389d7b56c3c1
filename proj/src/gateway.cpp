#include "tmem/gateway.hpp"

#include <fstream>
#include <thread>

#include "tmem/errors.hpp"
#include "tmem/ids.hpp"
#include "tmem/schemas.hpp"

namespace tmem {

const char* to_string(Role r) {
    switch (r) {
        case Role::thought_categorizer: return "thought_categorizer";
        case Role::pattern_detector: return "pattern_detector";
        case Role::outcome_interpreter: return "outcome_interpreter";
        case Role::attribution_analyst: return "attribution_analyst";
        case Role::tip_generator: return "tip_generator";
        case Role::segmenter: return "segmenter";
        case Role::subtask_tipper: return "subtask_tipper";
        case Role::generalizer: return "generalizer";
        case Role::consolidator: return "consolidator";
        case Role::retrieval_selector: return "retrieval_selector";
    }
    return "thought_categorizer";
}

Role role_from_string(const std::string& s) {
    static const std::map<std::string, Role> names = {
        {"thought_categorizer", Role::thought_categorizer},
        {"pattern_detector", Role::pattern_detector},
        {"outcome_interpreter", Role::outcome_interpreter},
        {"attribution_analyst", Role::attribution_analyst},
        {"tip_generator", Role::tip_generator},
        {"segmenter", Role::segmenter},
        {"subtask_tipper", Role::subtask_tipper},
        {"generalizer", Role::generalizer},
        {"consolidator", Role::consolidator},
        {"retrieval_selector", Role::retrieval_selector},
    };
    auto it = names.find(s);
    if (it == names.end()) throw Error(ErrorCode::invalid_field, "unknown role '" + s + "'");
    return it->second;
}

std::string ScriptedProvider::key(Role role, const std::string& prompt) {
    return std::string(to_string(role)) + ":" + sha256_hex(prompt);
}

ScriptedProvider ScriptedProvider::load(const std::filesystem::path& fixture_file) {
    std::ifstream in(fixture_file);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot open fixture file " + fixture_file.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::io_error, "fixture file is not valid JSON: " + std::string(e.what()));
    }
    std::map<std::string, nlohmann::json> entries;
    for (const auto& entry : doc.at("entries")) {
        std::string role = entry.at("role").get<std::string>();
        std::string hash = entry.at("prompt_sha256").get<std::string>();
        entries[role + ":" + hash] = entry.at("payload");
    }
    return ScriptedProvider(std::move(entries));
}

std::string ScriptedProvider::complete_text(const LlmRequest& req) {
    auto it = entries_.find(key(req.role, req.prompt));
    if (it == entries_.end()) {
        throw Error(ErrorCode::provider_unavailable,
                    std::string("scripted provider has no entry for role=") + to_string(req.role) +
                        " prompt_sha256=" + sha256_hex(req.prompt) +
                        " (prompt head: " + req.prompt.substr(0, 120) + ")");
    }
    return it->second.dump();
}

RateLimiter::RateLimiter(double requests_per_second)
    : rps_(requests_per_second), tokens_(requests_per_second),
      last_refill_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
    if (rps_ <= 0.0) return;
    std::unique_lock<std::mutex> lock(mu_);
    for (;;) {
        auto now = std::chrono::steady_clock::now();
        double elapsed = std::chrono::duration<double>(now - last_refill_).count();
        tokens_ = std::min(rps_, tokens_ + elapsed * rps_);
        last_refill_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        double wait = (1.0 - tokens_) / rps_;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        lock.lock();
    }
}

Gateway::Gateway(std::shared_ptr<ChatProvider> provider, std::shared_ptr<Embedder> embedder,
                 GatewayConfig cfg)
    : provider_(std::move(provider)), embedder_(std::move(embedder)), cfg_(cfg),
      limiter_(cfg.rate_limit_rps) {
    if (!provider_ || !embedder_) {
        throw Error(ErrorCode::provider_unavailable, "gateway needs a provider and an embedder");
    }
}

LlmResponse Gateway::complete(const LlmRequest& req) {
    if (!is_registered_schema(req.response_schema_id)) {
        throw Error(ErrorCode::invalid_field,
                    "unregistered response schema '" + req.response_schema_id + "'");
    }
    if (req.temperature < 0.0 || req.temperature > 2.0) {
        throw Error(ErrorCode::invalid_field, "temperature outside [0,2]");
    }

    int attempts = provider_->supports_repair() ? cfg_.schema_retries + 1 : 1;
    std::string repair_note;
    std::string last_problem;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        LlmRequest effective = req;
        if (!repair_note.empty()) effective.prompt += repair_note;

        limiter_.acquire();
        std::string raw = provider_->complete_text(effective);

        nlohmann::json payload = nlohmann::json::parse(raw, nullptr, false);
        if (payload.is_discarded()) {
            last_problem = "response is not valid JSON";
        } else {
            auto problems = validate_payload(req.response_schema_id, payload);
            if (problems.empty()) {
                return LlmResponse{std::move(payload), std::move(raw)};
            }
            last_problem.clear();
            for (const auto& p : problems) {
                if (!last_problem.empty()) last_problem += "; ";
                last_problem += p;
            }
        }
        repair_note = "\n\nYour previous reply was rejected (" + last_problem +
                      "). Reply again with JSON only, valid for schema " +
                      req.response_schema_id + ".";
    }
    throw Error(ErrorCode::schema_violation,
                std::string("role=") + to_string(req.role) + " payload invalid after " +
                    std::to_string(attempts) + " attempt(s): " + last_problem);
}

Embedding Gateway::embed(const std::string& text) { return embedder_->embed(text); }

} // namespace tmem
