#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "tmem/errors.hpp"
#include "tmem/gateway.hpp"

namespace tmem {

namespace {

// Splits "https://host:port/prefix" into client base and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    size_t path_start = base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    if (prefix == "/") prefix.clear();
    return {base_url.substr(0, path_start), prefix};
}

} // namespace

std::string LiveProvider::complete_text(const LlmRequest& req) {
    if (cfg_.base_url.empty()) {
        throw Error(ErrorCode::provider_unavailable, "live provider has no base URL configured");
    }
    auto [base, prefix] = split_base_url(cfg_.base_url);

    std::string model = cfg_.model;
    if (auto it = cfg_.model_by_role.find(to_string(req.role)); it != cfg_.model_by_role.end()) {
        model = it->second;
    }

    nlohmann::json body{
        {"model", model},
        {"temperature", req.temperature},
        {"messages",
         nlohmann::json::array(
             {{{"role", "system"},
               {"content", std::string("You are the ") + to_string(req.role) +
                               " component of an agent memory pipeline. Reply with JSON only."}},
              {{"role", "user"}, {"content", req.prompt}}})},
    };

    httplib::Client client(base);
    client.set_connection_timeout(cfg_.timeout_seconds, 0);
    client.set_read_timeout(cfg_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    auto res = client.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
        auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
            throw Error(ErrorCode::timeout, "chat completion timed out");
        }
        throw Error(ErrorCode::provider_unavailable,
                    "chat completion transport error: " + httplib::to_string(err));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorCode::provider_unavailable,
                    "chat completion returned HTTP " + std::to_string(res->status));
    }

    nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) {
        throw Error(ErrorCode::provider_unavailable, "chat completion response is not JSON");
    }
    try {
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::provider_unavailable,
                    "chat completion response missing choices[0].message.content");
    }
}

} // namespace tmem
