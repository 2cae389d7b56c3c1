#include "tmem/embedder.hpp"

#include <cctype>
#include <cmath>

#include "tmem/errors.hpp"
#include "tmem/ids.hpp"

namespace tmem {

HashingEmbedder::HashingEmbedder(int dim) : dim_(dim) {
    if (dim <= 0) throw Error(ErrorCode::invalid_field, "embedder dimension must be positive");
}

std::vector<std::string> HashingEmbedder::tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

Embedding HashingEmbedder::embed(const std::string& text) const {
    std::vector<std::string> tokens = tokenize(text);
    if (tokens.empty()) {
        throw Error(ErrorCode::empty_text, "cannot embed empty text");
    }
    std::vector<double> acc(static_cast<size_t>(dim_), 0.0);
    auto add = [&](const std::string& feature) {
        std::uint64_t h = fnv1a64(feature);
        size_t idx = static_cast<size_t>(h % static_cast<std::uint64_t>(dim_));
        double sign = (h >> 63) ? -1.0 : 1.0;
        acc[idx] += sign;
    };
    for (const auto& t : tokens) add(t);
    for (size_t i = 0; i + 1 < tokens.size(); ++i) add(tokens[i] + " " + tokens[i + 1]);

    double norm = 0.0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        // Signed counts can cancel; nudge a deterministic slot so the
        // unit-norm contract still holds.
        acc[fnv1a64(text) % static_cast<std::uint64_t>(dim_)] = 1.0;
        norm = 1.0;
    }
    for (double& v : acc) v /= norm;
    return Embedding{std::move(acc)};
}

} // namespace tmem
