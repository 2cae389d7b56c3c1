#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tmem/types.hpp"

namespace tmem {

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual int dim() const = 0;
    // Unit-norm vector; throws EmptyText on whitespace-only input.
    virtual Embedding embed(const std::string& text) const = 0;
};

// Deterministic feature-hashing embedder. Features are lowercased word
// unigrams and bigrams; each feature is FNV-1a-64 hashed to an index in
// [0, dim) with sign taken from bit 63; counts accumulate and the result is
// L2-normalized. Order-insensitive and reproducible across platforms.
class HashingEmbedder final : public Embedder {
public:
    explicit HashingEmbedder(int dim = 256);
    int dim() const override { return dim_; }
    Embedding embed(const std::string& text) const override;

    // Lowercased alphanumeric word tokens, in order.
    static std::vector<std::string> tokenize(const std::string& text);

private:
    int dim_;
};

} // namespace tmem
