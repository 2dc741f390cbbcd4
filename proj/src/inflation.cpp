#include "coin/inflation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "coin/rng.hpp"

namespace coin {

const TokenSeq& anchor_tokens(const ServiceRecord& record, AnchorSource source) {
    switch (source) {
        case AnchorSource::prompt: return record.prompt;
        case AnchorSource::answer: return record.answer;
        case AnchorSource::reasoning: break;
    }
    return record.reasoning;
}

TokenSeq original_reasoning(const InflatedRecord& inflated) {
    TokenSeq original;
    original.reserve(inflated.record.reasoning.size() - inflated.injected_positions.size());
    size_t next = 0;
    for (size_t i = 0; i < inflated.record.reasoning.size(); ++i) {
        if (next < inflated.injected_positions.size() && inflated.injected_positions[next] == i) {
            ++next;
            continue;
        }
        original.push_back(inflated.record.reasoning[i]);
    }
    return original;
}

// ---------------------------------------------------------------------------
// Insertion
// ---------------------------------------------------------------------------

namespace {

struct Insertion {
    TokenSeq reasoning;
    std::vector<uint64_t> positions;  // sorted final indices of injected tokens
};

// Splices injected runs at uniform gaps of the original sequence
// (block_interleave) or appends them all at the end.
Insertion insert_runs(const TokenSeq& original, const std::vector<TokenSeq>& runs,
                      InsertionMode mode, Rng& rng) {
    Insertion out;
    size_t injected_total = 0;
    for (const auto& run : runs) injected_total += run.size();
    out.reasoning.reserve(original.size() + injected_total);
    out.positions.reserve(injected_total);

    if (mode == InsertionMode::append) {
        out.reasoning = original;
        for (const auto& run : runs) {
            for (const auto& token : run) {
                out.positions.push_back(out.reasoning.size());
                out.reasoning.push_back(token);
            }
        }
        return out;
    }

    // One uniform gap in [0, |original|] per run; runs landing on the same
    // gap keep their draw order.
    std::vector<std::pair<uint64_t, size_t>> placed(runs.size());
    for (size_t r = 0; r < runs.size(); ++r) {
        placed[r] = {rng.below(original.size() + 1), r};
    }
    std::stable_sort(placed.begin(), placed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    size_t next_run = 0;
    for (size_t gap = 0; gap <= original.size(); ++gap) {
        while (next_run < placed.size() && placed[next_run].first == gap) {
            for (const auto& token : runs[placed[next_run].second]) {
                out.positions.push_back(out.reasoning.size());
                out.reasoning.push_back(token);
            }
            ++next_run;
        }
        if (gap < original.size()) out.reasoning.push_back(original[gap]);
    }
    return out;
}

// Groups a flat token list into runs of length drawn from [run_min, run_max].
std::vector<TokenSeq> group_runs(const TokenSeq& tokens, uint64_t run_min, uint64_t run_max,
                                 Rng& rng) {
    std::vector<TokenSeq> runs;
    size_t offset = 0;
    while (offset < tokens.size()) {
        const uint64_t want = rng.range(run_min, run_max);
        const size_t len = std::min<size_t>(want, tokens.size() - offset);
        runs.emplace_back(tokens.begin() + offset, tokens.begin() + offset + len);
        offset += len;
    }
    return runs;
}

InflatedRecord finish(const ServiceRecord& base, TokenSeq injected_flat,
                      std::vector<TokenSeq> segments, InflationKind kind,
                      const InflationConfig& config, Rng& rng) {
    std::vector<TokenSeq> runs;
    if (!segments.empty()) {
        runs = std::move(segments);
    } else if (config.insertion_mode == InsertionMode::block_interleave) {
        runs = group_runs(injected_flat, config.run_min, config.run_max, rng);
    } else {
        runs.push_back(std::move(injected_flat));
    }

    size_t injected_total = 0;
    for (const auto& run : runs) injected_total += run.size();

    Insertion inserted = insert_runs(base.reasoning, runs, config.insertion_mode, rng);

    InflatedRecord out;
    out.record = base;
    out.record.reasoning = std::move(inserted.reasoning);
    out.record.reported_reasoning_count = out.record.reasoning.size();
    out.record.label = RecordLabel{true, kind};
    out.injected_token_count = injected_total;
    out.kind = kind;
    out.achieved_ir = base.reasoning.empty()
                          ? 0.0
                          : static_cast<double>(injected_total) /
                                static_cast<double>(base.reasoning.size());
    out.injected_positions = std::move(inserted.positions);
    return out;
}

uint64_t token_budget(const ServiceRecord& record, double ir) {
    if (ir <= 0.0) throw std::invalid_argument("inflate: inflation ratio must be > 0");
    if (record.reasoning.empty()) {
        throw std::invalid_argument("inflate: record has empty reasoning");
    }
    return static_cast<uint64_t>(std::floor(ir * static_cast<double>(record.reasoning.size())));
}

}  // namespace

// ---------------------------------------------------------------------------
// NeighborIndex
// ---------------------------------------------------------------------------

NeighborIndex::NeighborIndex(const Vocabulary& vocabulary, const EmbeddingProvider& provider,
                             size_t top_n)
    : vocabulary_(vocabulary), provider_(provider), top_n_(top_n),
      dimension_(provider.dimension()) {
    if (top_n_ == 0) throw std::invalid_argument("NeighborIndex: top_n must be >= 1");
    matrix_.resize(vocabulary_.size() * dimension_);
    for (uint32_t id = 0; id < vocabulary_.size(); ++id) {
        const Embedding vec = provider_.embed_token(vocabulary_.token(id));
        std::copy(vec.begin(), vec.end(), matrix_.begin() + static_cast<size_t>(id) * dimension_);
    }
}

const std::vector<uint32_t>& NeighborIndex::neighbors(uint32_t token_id) const {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(token_id);
    if (it != cache_.end()) return it->second;
    if (token_id >= vocabulary_.size()) {
        throw std::invalid_argument("NeighborIndex: token id out of range");
    }

    const float* anchor = matrix_.data() + static_cast<size_t>(token_id) * dimension_;
    std::vector<std::pair<float, uint32_t>> best;  // min-heap on similarity
    best.reserve(top_n_ + 1);
    auto cmp = [](const auto& a, const auto& b) { return a.first > b.first; };
    for (uint32_t id = 1; id < vocabulary_.size(); ++id) {  // skip <unk>
        if (id == token_id) continue;
        const float* row = matrix_.data() + static_cast<size_t>(id) * dimension_;
        float dot = 0.0f;  // ranking only; float keeps the scan vectorizable
        for (size_t i = 0; i < dimension_; ++i) {
            dot += anchor[i] * row[i];
        }
        if (best.size() < top_n_) {
            best.emplace_back(dot, id);
            std::push_heap(best.begin(), best.end(), cmp);
        } else if (dot > best.front().first) {
            std::pop_heap(best.begin(), best.end(), cmp);
            best.back() = {dot, id};
            std::push_heap(best.begin(), best.end(), cmp);
        }
    }
    std::sort(best.begin(), best.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    std::vector<uint32_t> ids;
    ids.reserve(best.size());
    for (const auto& [sim, id] : best) ids.push_back(id);
    return cache_.emplace(token_id, std::move(ids)).first->second;
}

RetrievalIndex build_retrieval_index(const std::vector<ServiceRecord>& corpus,
                                     const EmbeddingProvider& provider) {
    RetrievalIndex index;
    index.entries.reserve(corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i) {
        if (corpus[i].prompt.empty()) continue;
        RetrievalIndex::Entry entry;
        entry.tokens = corpus[i].prompt;
        entry.embedding = provider.embed_block(entry.tokens);
        entry.source_record = i;
        index.entries.push_back(std::move(entry));
    }
    return index;
}

// ---------------------------------------------------------------------------
// Token collectors
// ---------------------------------------------------------------------------

namespace {

TokenSeq collect_naive(uint64_t count, const Vocabulary& vocabulary, Rng& rng) {
    if (vocabulary.size() <= 1) {
        throw std::invalid_argument("inflate_naive: empty vocabulary");
    }
    TokenSeq tokens;
    tokens.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        const uint32_t id = static_cast<uint32_t>(1 + rng.below(vocabulary.size() - 1));
        tokens.push_back(vocabulary.token(id));
    }
    return tokens;
}

TokenSeq collect_ada1(uint64_t count, const TokenSeq& anchors, const NeighborIndex& index,
                      Rng& rng) {
    if (anchors.empty()) {
        throw std::invalid_argument("inflate_ada1: empty anchor source");
    }
    TokenSeq tokens;
    tokens.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        const Token& anchor = anchors[rng.index(anchors.size())];
        const auto& pool = index.neighbors(anchor.id);
        if (pool.empty()) {
            throw std::invalid_argument("inflate_ada1: no neighbor candidates");
        }
        tokens.push_back(index.vocabulary().token(pool[rng.index(pool.size())]));
    }
    return tokens;
}

TokenSeq collect_ada2(uint64_t count, const TokenSeq& anchors, Rng& rng) {
    if (anchors.empty()) {
        throw std::invalid_argument("inflate_ada2: empty anchor source");
    }
    TokenSeq tokens;
    tokens.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        tokens.push_back(anchors[rng.index(anchors.size())]);
    }
    return tokens;
}

// Donor segments until the budget is covered; overshoot is bounded by one
// segment length.
std::vector<TokenSeq> collect_ada3_segments(uint64_t budget,
                                            const std::vector<ServiceRecord>& donors,
                                            std::optional<size_t> self_index,
                                            const InflationConfig& config, Rng& rng) {
    std::vector<size_t> usable;
    for (size_t i = 0; i < donors.size(); ++i) {
        if (self_index && *self_index == i) continue;
        if (!donors[i].reasoning.empty()) usable.push_back(i);
    }
    if (usable.empty()) {
        throw std::invalid_argument("inflate_ada3: empty donor corpus");
    }
    std::vector<TokenSeq> segments;
    uint64_t collected = 0;
    while (collected < budget) {
        const auto& donor = donors[usable[rng.index(usable.size())]];
        const uint64_t want = rng.range(config.segment_min, config.segment_max);
        const uint64_t len = std::min<uint64_t>(want, donor.reasoning.size());
        const uint64_t start = rng.below(donor.reasoning.size() - len + 1);
        segments.emplace_back(donor.reasoning.begin() + start,
                              donor.reasoning.begin() + start + len);
        collected += len;
    }
    return segments;
}

// Passages ranked by cosine to the anchor embedding, cycled if the budget
// exceeds the index.
std::vector<TokenSeq> collect_ada4_segments(uint64_t budget, const Embedding& query,
                                            const RetrievalIndex& retrieval,
                                            std::optional<size_t> self_index) {
    std::vector<std::pair<double, size_t>> ranked;
    for (size_t i = 0; i < retrieval.entries.size(); ++i) {
        if (self_index && retrieval.entries[i].source_record == *self_index) continue;
        ranked.emplace_back(cosine_similarity(query, retrieval.entries[i].embedding), i);
    }
    if (ranked.empty()) {
        throw std::invalid_argument("inflate_ada4: empty retrieval index");
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    std::vector<TokenSeq> segments;
    uint64_t collected = 0;
    size_t rank = 0;
    while (collected < budget) {
        const auto& entry = retrieval.entries[ranked[rank % ranked.size()].second];
        segments.push_back(entry.tokens);
        collected += entry.tokens.size();
        ++rank;
    }
    return segments;
}

TokenSeq flatten(const std::vector<TokenSeq>& segments) {
    TokenSeq flat;
    for (const auto& seg : segments) flat.insert(flat.end(), seg.begin(), seg.end());
    return flat;
}

}  // namespace

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

InflatedRecord inflate_naive(const ServiceRecord& record, double ir,
                             const Vocabulary& vocabulary, const InflationConfig& config,
                             uint64_t seed) {
    Rng rng(mix_key(seed, 0x6e61));
    const uint64_t budget = token_budget(record, ir);
    TokenSeq injected = collect_naive(budget, vocabulary, rng);
    return finish(record, std::move(injected), {}, InflationKind::naive, config, rng);
}

InflatedRecord inflate_ada1(const ServiceRecord& record, double ir,
                            const NeighborIndex& neighbors, const InflationConfig& config,
                            uint64_t seed) {
    Rng rng(mix_key(seed, 0x6131));
    const uint64_t budget = token_budget(record, ir);
    const TokenSeq& anchors = anchor_tokens(record, config.anchor_source);
    TokenSeq injected = collect_ada1(budget, anchors, neighbors, rng);
    return finish(record, std::move(injected), {}, InflationKind::ada1, config, rng);
}

InflatedRecord inflate_ada2(const ServiceRecord& record, double ir,
                            const InflationConfig& config, uint64_t seed) {
    Rng rng(mix_key(seed, 0x6132));
    const uint64_t budget = token_budget(record, ir);
    const TokenSeq& anchors = anchor_tokens(record, config.anchor_source);
    TokenSeq injected = collect_ada2(budget, anchors, rng);
    return finish(record, std::move(injected), {}, InflationKind::ada2, config, rng);
}

InflatedRecord inflate_ada3(const ServiceRecord& record, double ir,
                            const std::vector<ServiceRecord>& donor_corpus,
                            const InflationConfig& config, uint64_t seed,
                            std::optional<size_t> self_index) {
    Rng rng(mix_key(seed, 0x6133));
    const uint64_t budget = token_budget(record, ir);
    auto segments = collect_ada3_segments(budget, donor_corpus, self_index, config, rng);
    return finish(record, {}, std::move(segments), InflationKind::ada3, config, rng);
}

InflatedRecord inflate_ada4(const ServiceRecord& record, double ir,
                            const RetrievalIndex& retrieval,
                            const EmbeddingProvider& provider,
                            const InflationConfig& config, uint64_t seed,
                            std::optional<size_t> self_index) {
    Rng rng(mix_key(seed, 0x6134));
    const uint64_t budget = token_budget(record, ir);
    const TokenSeq& anchors = anchor_tokens(record, config.anchor_source);
    if (anchors.empty()) {
        throw std::invalid_argument("inflate_ada4: empty anchor source");
    }
    const Embedding query = provider.embed_block(anchors);
    auto segments = collect_ada4_segments(budget, query, retrieval, self_index);
    return finish(record, {}, std::move(segments), InflationKind::ada4, config, rng);
}

InflatedRecord misreport(const ServiceRecord& record, double multiplier) {
    if (multiplier <= 1.0) {
        throw std::invalid_argument("misreport: multiplier must be > 1");
    }
    if (record.reasoning.empty()) {
        throw std::invalid_argument("misreport: record has empty reasoning");
    }
    InflatedRecord out;
    out.record = record;
    out.record.reported_reasoning_count = static_cast<uint64_t>(
        std::floor(multiplier * static_cast<double>(record.reasoning.size())));
    out.record.label = RecordLabel{true, InflationKind::misreport};
    out.kind = InflationKind::misreport;
    out.injected_token_count = 0;
    out.achieved_ir =
        static_cast<double>(out.record.reported_reasoning_count - record.reasoning.size()) /
        static_cast<double>(record.reasoning.size());
    return out;
}

// ---------------------------------------------------------------------------
// Dataset pipeline
// ---------------------------------------------------------------------------

std::vector<InflatedRecord> inflate_dataset(const std::vector<ServiceRecord>& corpus,
                                            const InflationConfig& config,
                                            const InflationContext& context) {
    if (corpus.empty()) {
        throw std::invalid_argument("inflate_dataset: empty corpus");
    }
    if (config.kind == InflationKind::misreport) {
        std::vector<InflatedRecord> out;
        for (const auto& record : corpus) {
            if (record.reasoning.empty()) continue;
            out.push_back(misreport(record, config.misreport_multiplier));
        }
        return out;
    }
    if (config.ratios.empty()) {
        throw std::invalid_argument("inflate_dataset: no inflation ratios");
    }

    std::map<InflationKind, double> weights = config.strategy_weights;
    if (weights.empty()) weights[config.kind] = 1.0;
    double total_weight = 0.0;
    for (const auto& [kind, w] : weights) {
        if (w < 0.0 || kind == InflationKind::misreport) {
            throw std::invalid_argument("inflate_dataset: bad strategy weight");
        }
        total_weight += w;
    }
    if (total_weight <= 0.0) {
        throw std::invalid_argument("inflate_dataset: zero strategy weights");
    }

    const double max_ratio = *std::max_element(config.ratios.begin(), config.ratios.end());
    if (max_ratio <= 0.0) {
        throw std::invalid_argument("inflate_dataset: ratios must be > 0");
    }

    std::vector<InflatedRecord> out;
    for (size_t rec_idx = 0; rec_idx < corpus.size(); ++rec_idx) {
        const auto& record = corpus[rec_idx];
        if (record.reasoning.empty()) continue;

        Rng rng(mix_key(config.seed, rec_idx));
        const uint64_t pool_target = static_cast<uint64_t>(
            std::floor(static_cast<double>(record.reasoning.size()) * max_ratio));

        // Collect the strategy-weighted token pool.
        TokenSeq pool;
        pool.reserve(pool_target);
        size_t strategies_left = weights.size();
        uint64_t remaining = pool_target;
        for (const auto& [kind, w] : weights) {
            uint64_t quota = strategies_left == 1
                                 ? remaining
                                 : std::min<uint64_t>(remaining,
                                                      static_cast<uint64_t>(std::llround(
                                                          static_cast<double>(pool_target) * w /
                                                          total_weight)));
            --strategies_left;
            remaining -= quota;
            if (quota == 0) continue;
            switch (kind) {
                case InflationKind::naive: {
                    if (!context.vocabulary) {
                        throw std::invalid_argument("inflate_dataset: naive needs a vocabulary");
                    }
                    TokenSeq part = collect_naive(quota, *context.vocabulary, rng);
                    pool.insert(pool.end(), part.begin(), part.end());
                    break;
                }
                case InflationKind::ada1: {
                    if (!context.neighbors) {
                        throw std::invalid_argument("inflate_dataset: ada1 needs a neighbor index");
                    }
                    TokenSeq part = collect_ada1(quota, anchor_tokens(record, config.anchor_source),
                                                 *context.neighbors, rng);
                    pool.insert(pool.end(), part.begin(), part.end());
                    break;
                }
                case InflationKind::ada2: {
                    TokenSeq part =
                        collect_ada2(quota, anchor_tokens(record, config.anchor_source), rng);
                    pool.insert(pool.end(), part.begin(), part.end());
                    break;
                }
                case InflationKind::ada3: {
                    TokenSeq part = flatten(
                        collect_ada3_segments(quota, corpus, rec_idx, config, rng));
                    part.resize(quota);
                    pool.insert(pool.end(), part.begin(), part.end());
                    break;
                }
                case InflationKind::ada4: {
                    if (!context.retrieval || !context.provider) {
                        throw std::invalid_argument(
                            "inflate_dataset: ada4 needs a retrieval index and provider");
                    }
                    const TokenSeq& anchors = anchor_tokens(record, config.anchor_source);
                    if (anchors.empty()) {
                        throw std::invalid_argument("inflate_dataset: empty anchor source");
                    }
                    TokenSeq part = flatten(collect_ada4_segments(
                        quota, context.provider->embed_block(anchors), *context.retrieval,
                        rec_idx));
                    part.resize(quota);
                    pool.insert(pool.end(), part.begin(), part.end());
                    break;
                }
                case InflationKind::misreport:
                    break;  // excluded above
            }
        }

        // One shared shuffle; each ratio takes a prefix, so smaller ratios
        // inject subsets of larger ones.
        rng.shuffle(pool);
        for (double ratio : config.ratios) {
            if (ratio <= 0.0) {
                throw std::invalid_argument("inflate_dataset: ratios must be > 0");
            }
            const uint64_t want = static_cast<uint64_t>(
                std::floor(static_cast<double>(record.reasoning.size()) * ratio));
            TokenSeq chosen(pool.begin(), pool.begin() + std::min<size_t>(want, pool.size()));
            Rng insert_rng(mix_key(config.seed, mix_key(rec_idx, std::llround(ratio * 1000.0))));
            out.push_back(
                finish(record, std::move(chosen), {}, config.kind, config, insert_rng));
        }
    }
    return out;
}

}  // namespace coin
