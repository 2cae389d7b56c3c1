#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tmem/gateway.hpp"

namespace tmem::testing {

// Deterministic stand-in for the chat model: a pure function of (role,
// prompt) built from the marker lines the prompt templates embed. Used by
// property tests on random corpora and as the fallback when generating the
// scripted-provider fixture file.
class RuleProvider : public ChatProvider {
public:
    std::string name() const override { return "rule"; }
    bool supports_repair() const override { return false; }
    std::string complete_text(const LlmRequest& req) override;
};

// Prompt parsing helpers shared with fixture authoring.
std::string prompt_line(const std::string& prompt, const std::string& marker);
std::vector<std::pair<int, std::string>> prompt_segments(const std::string& prompt);
nlohmann::json prompt_json_block(const std::string& prompt, const std::string& marker);

struct Override {
    Role role;
    std::function<bool(const std::string& prompt)> matches;
    std::function<nlohmann::json(const std::string& prompt)> payload;
};

// Checks overrides in order, falling back to the rule provider; fixture
// generation uses this to pin the canonical payloads.
class OverrideProvider : public ChatProvider {
public:
    explicit OverrideProvider(std::vector<Override> overrides)
        : overrides_(std::move(overrides)) {}

    std::string name() const override { return "override"; }
    bool supports_repair() const override { return false; }
    std::string complete_text(const LlmRequest& req) override;

private:
    std::vector<Override> overrides_;
    RuleProvider fallback_;
};

// Records every (role, prompt, payload) triple passing through, in call
// order, for writing a scripted-provider fixture file.
class RecordingProvider : public ChatProvider {
public:
    explicit RecordingProvider(std::shared_ptr<ChatProvider> inner) : inner_(std::move(inner)) {}

    std::string name() const override { return inner_->name(); }
    bool supports_repair() const override { return inner_->supports_repair(); }
    std::string complete_text(const LlmRequest& req) override;

    nlohmann::json fixture_json() const;

private:
    std::shared_ptr<ChatProvider> inner_;
    std::vector<std::tuple<Role, std::string, nlohmann::json>> records_;
};

} // namespace tmem::testing
