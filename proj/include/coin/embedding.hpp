#pragma once

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "coin/core.hpp"

namespace coin {

using Embedding = std::vector<float>;

struct ProviderUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The auditor-designated embedding function Embd(.). Implementations must be
// deterministic (same input, same output) with a fixed dimension, and must be
// callable from concurrent audit sessions.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual const std::string& name() const = 0;
    virtual size_t dimension() const = 0;

    virtual Embedding embed_token(const Token& token) const = 0;

    // Sequence embedding of a non-empty token span.
    virtual Embedding embed_block(const TokenSeq& tokens) const = 0;
};

// Deterministic provider for desk-scale work: each token id maps to a
// unit-norm Gaussian vector drawn from a counter-based stream keyed by
// (seed, id); a block embeds as the normalized mean of its member vectors.
// Member tokens therefore correlate with their block, which is the structure
// the matching heads learn. Block accumulation runs over sorted distinct ids,
// so a permuted token multiset produces the identical vector.
class SyntheticProvider final : public EmbeddingProvider {
public:
    explicit SyntheticProvider(uint64_t seed, size_t dimension = 384);

    const std::string& name() const override { return name_; }
    size_t dimension() const override { return dimension_; }
    uint64_t seed() const { return seed_; }

    Embedding embed_token(const Token& token) const override;
    Embedding embed_block(const TokenSeq& tokens) const override;

private:
    const Embedding& token_vector(uint32_t id) const;

    std::string name_;
    uint64_t seed_;
    size_t dimension_;
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<uint32_t, Embedding> cache_;
};

// External provider speaking line-delimited JSON over a child process:
//   request  {"texts": ["...", ...]}
//   response {"vectors": [[...], ...]}
// The dimension is negotiated at startup by embedding one empty string.
// Transport failures raise ProviderUnavailable. Calls are serialized
// internally, so the provider is safe to share across sessions.
class SubprocessProvider final : public EmbeddingProvider {
public:
    explicit SubprocessProvider(const std::string& command, std::string name = "external");
    ~SubprocessProvider() override;

    SubprocessProvider(const SubprocessProvider&) = delete;
    SubprocessProvider& operator=(const SubprocessProvider&) = delete;

    const std::string& name() const override { return name_; }
    size_t dimension() const override { return dimension_; }

    Embedding embed_token(const Token& token) const override;
    Embedding embed_block(const TokenSeq& tokens) const override;

    std::vector<Embedding> embed_texts(const std::vector<std::string>& texts) const;

private:
    std::string name_;
    size_t dimension_ = 0;
    mutable std::mutex transport_mutex_;
    int child_pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    mutable std::string read_buffer_;
};

// Component-wise arithmetic mean, not re-normalized. Inputs must be
// non-empty with equal dimensions.
Embedding average_embeddings(const std::vector<Embedding>& embeddings);

// a.b / (|a| |b|), clamped to [-1, 1]. Identical (or exactly opposite)
// inputs return +-1.0 exactly. A zero vector on either side yields 0 and
// raises the degenerate flag when requested.
double cosine_similarity(const Embedding& a, const Embedding& b, bool* degenerate = nullptr);

}  // namespace coin
