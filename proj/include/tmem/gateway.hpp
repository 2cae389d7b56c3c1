#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "tmem/embedder.hpp"
#include "tmem/types.hpp"

namespace tmem {

// One role per LLM use in the pipeline.
enum class Role {
    thought_categorizer,
    pattern_detector,
    outcome_interpreter,
    attribution_analyst,
    tip_generator,
    segmenter,
    subtask_tipper,
    generalizer,
    consolidator,
    retrieval_selector,
};

const char* to_string(Role r);
Role role_from_string(const std::string& s);

struct LlmRequest {
    Role role = Role::thought_categorizer;
    std::string prompt;
    std::string response_schema_id;
    double temperature = 0.0;
};

struct LlmResponse {
    nlohmann::json payload;
    std::string raw;
};

// Raw text completion; the gateway layers JSON parsing, schema validation,
// repair retries and rate limiting on top.
class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual std::string name() const = 0;
    virtual std::string complete_text(const LlmRequest& req) = 0;
    // Providers that replay canned responses cannot act on a repair prompt.
    virtual bool supports_repair() const { return true; }
};

// Replays canned payloads keyed by (role, SHA-256 of prompt). Unmatched
// requests fail loudly with the role and hash so fixtures can be regenerated.
class ScriptedProvider final : public ChatProvider {
public:
    static ScriptedProvider load(const std::filesystem::path& fixture_file);
    explicit ScriptedProvider(std::map<std::string, nlohmann::json> entries)
        : entries_(std::move(entries)) {}

    std::string name() const override { return "scripted"; }
    std::string complete_text(const LlmRequest& req) override;
    bool supports_repair() const override { return false; }

    static std::string key(Role role, const std::string& prompt);
    size_t size() const { return entries_.size(); }

private:
    std::map<std::string, nlohmann::json> entries_;
};

// Generic chat-completions HTTP/JSON endpoint. Nothing model-specific: base
// URL, model name and API key come from configuration.
struct LiveProviderConfig {
    std::string base_url;               // e.g. https://api.example.com
    std::string model;                  // default model id
    std::map<std::string, std::string> model_by_role; // optional per-role override
    std::string api_key;                // resolved from the configured env var
    int timeout_seconds = 60;
};

class LiveProvider final : public ChatProvider {
public:
    explicit LiveProvider(LiveProviderConfig cfg) : cfg_(std::move(cfg)) {}
    std::string name() const override { return "live"; }
    std::string complete_text(const LlmRequest& req) override;

private:
    LiveProviderConfig cfg_;
};

// Token bucket; serializes admission only, calls run concurrently.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_second = 0.0); // <= 0 disables
    void acquire();

private:
    std::mutex mu_;
    double rps_;
    double tokens_;
    std::chrono::steady_clock::time_point last_refill_;
};

struct GatewayConfig {
    int schema_retries = 2;       // repair attempts before SchemaViolation
    double rate_limit_rps = 0.0;  // 0 = unlimited
};

// Uniform access to the chat model and the embedder. Shareable across
// threads; the limiter serializes admission only.
class Gateway {
public:
    Gateway(std::shared_ptr<ChatProvider> provider, std::shared_ptr<Embedder> embedder,
            GatewayConfig cfg = {});

    // Schema-valid payload or ProviderUnavailable / SchemaViolation / Timeout.
    LlmResponse complete(const LlmRequest& req);

    // Unit-norm vector of the configured dimension; EmptyText on blank input.
    Embedding embed(const std::string& text);

    int embed_dim() const { return embedder_->dim(); }
    const ChatProvider& provider() const { return *provider_; }

private:
    std::shared_ptr<ChatProvider> provider_;
    std::shared_ptr<Embedder> embedder_;
    GatewayConfig cfg_;
    RateLimiter limiter_;
};

} // namespace tmem
