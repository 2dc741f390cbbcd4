#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "coin/core.hpp"
#include "coin/embedding.hpp"

namespace coin {

enum class InsertionMode { append, block_interleave };
enum class AnchorSource { prompt, reasoning, answer };

const TokenSeq& anchor_tokens(const ServiceRecord& record, AnchorSource source);

struct InflationConfig {
    InflationKind kind = InflationKind::naive;
    std::vector<double> ratios = {0.5, 1.0, 3.0};              // K
    AnchorSource anchor_source = AnchorSource::reasoning;
    std::map<InflationKind, double> strategy_weights;          // empty -> {kind: 1.0}
    uint64_t segment_min = 16, segment_max = 64;               // [L_min, L_max]
    InsertionMode insertion_mode = InsertionMode::block_interleave;
    uint64_t run_min = 8, run_max = 64;                        // [B_min, B_max]
    size_t neighbor_pool = 10;                                 // ada1 top-n candidates
    double misreport_multiplier = 2.0;
    uint64_t seed = 42;
};

// An inflated record as billed, plus private bookkeeping. injected_positions
// index into record.reasoning and are never visible to the auditor; removing
// them restores the original trace exactly.
struct InflatedRecord {
    ServiceRecord record;
    uint64_t injected_token_count = 0;
    InflationKind kind = InflationKind::naive;
    double achieved_ir = 0.0;
    std::vector<uint64_t> injected_positions;
};

TokenSeq original_reasoning(const InflatedRecord& inflated);

// Vocabulary-wide cosine nearest neighbors under a fixed provider, memoized
// per anchor id. Self matches are excluded.
class NeighborIndex {
public:
    NeighborIndex(const Vocabulary& vocabulary, const EmbeddingProvider& provider,
                  size_t top_n = 10);

    const std::vector<uint32_t>& neighbors(uint32_t token_id) const;
    size_t top_n() const { return top_n_; }
    const Vocabulary& vocabulary() const { return vocabulary_; }

private:
    const Vocabulary& vocabulary_;
    const EmbeddingProvider& provider_;
    size_t top_n_;
    mutable std::mutex mutex_;
    mutable std::map<uint32_t, std::vector<uint32_t>> cache_;
    std::vector<float> matrix_;  // vocabulary_size x d unit vectors
    size_t dimension_;
};

// Passage store for retrieval-style injection; by default built over the
// corpus records' prompts.
struct RetrievalIndex {
    struct Entry {
        TokenSeq tokens;
        Embedding embedding;
        size_t source_record = 0;
    };
    std::vector<Entry> entries;
};

RetrievalIndex build_retrieval_index(const std::vector<ServiceRecord>& corpus,
                                     const EmbeddingProvider& provider);

// -- Generators (Table-style taxonomy) --------------------------------------

// Uniform draws from the vocabulary (excluding the unknown id).
InflatedRecord inflate_naive(const ServiceRecord& record, double ir,
                             const Vocabulary& vocabulary, const InflationConfig& config,
                             uint64_t seed);

// Nearest-vocabulary-neighbor draws around random anchor-token embeddings.
InflatedRecord inflate_ada1(const ServiceRecord& record, double ir,
                            const NeighborIndex& neighbors, const InflationConfig& config,
                            uint64_t seed);

// Uniform draws with replacement from the anchor token sequence.
InflatedRecord inflate_ada2(const ServiceRecord& record, double ir,
                            const InflationConfig& config, uint64_t seed);

// Contiguous reasoning segments cut from other records. When the record
// lives inside donor_corpus, pass its index so it is skipped.
InflatedRecord inflate_ada3(const ServiceRecord& record, double ir,
                            const std::vector<ServiceRecord>& donor_corpus,
                            const InflationConfig& config, uint64_t seed,
                            std::optional<size_t> self_index = std::nullopt);

// Top retrieved passages by cosine to the anchor embedding.
InflatedRecord inflate_ada4(const ServiceRecord& record, double ir,
                            const RetrievalIndex& retrieval,
                            const EmbeddingProvider& provider,
                            const InflationConfig& config, uint64_t seed,
                            std::optional<size_t> self_index = std::nullopt);

// Tokens untouched; only the reported count is raised. The committed tree
// covers the real tokens, so audited phantom indices fail.
InflatedRecord misreport(const ServiceRecord& record, double multiplier);

// -- Streamlined dataset pipeline -------------------------------------------

struct InflationContext {
    const Vocabulary* vocabulary = nullptr;
    const EmbeddingProvider* provider = nullptr;
    NeighborIndex* neighbors = nullptr;
    const RetrievalIndex* retrieval = nullptr;
};

// Per record: pools floor(|R| * max(K)) tokens via the weighted strategies,
// then emits one record per ratio k in K with exactly floor(|R| * k) injected
// tokens subsampled from the pool. Records with empty reasoning are skipped.
std::vector<InflatedRecord> inflate_dataset(const std::vector<ServiceRecord>& corpus,
                                            const InflationConfig& config,
                                            const InflationContext& context);

}  // namespace coin
