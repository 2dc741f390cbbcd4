#include "coin/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "coin/rng.hpp"

namespace coin {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

namespace {

std::shared_ptr<Vocabulary> generate_vocabulary(size_t size, Rng& rng) {
    auto vocab = std::make_shared<Vocabulary>();
    while (vocab->size() < size + 1) {  // +1 for <unk>
        const size_t len = 4 + rng.index(6);
        std::string surface;
        surface.reserve(len);
        for (size_t i = 0; i < len; ++i) {
            surface.push_back(static_cast<char>('a' + rng.index(26)));
        }
        vocab->add(surface);
    }
    return vocab;
}

// Zipf-like rank weights over a small type set.
size_t zipf_index(size_t count, Rng& rng) {
    double total = 0.0;
    for (size_t i = 0; i < count; ++i) total += 1.0 / static_cast<double>(i + 1);
    double u = rng.uniform() * total;
    for (size_t i = 0; i < count; ++i) {
        u -= 1.0 / static_cast<double>(i + 1);
        if (u <= 0.0) return i;
    }
    return count - 1;
}

}  // namespace

SyntheticCorpus generate_corpus(const SyntheticCorpusConfig& config) {
    if (config.record_count == 0 || config.vocabulary_size < 2) {
        throw std::invalid_argument("generate_corpus: bad config");
    }
    SyntheticCorpus corpus;
    Rng vocab_rng(mix_key(config.seed, 0x766f6361));
    corpus.vocabulary = generate_vocabulary(config.vocabulary_size, vocab_rng);
    const Vocabulary& vocab = *corpus.vocabulary;

    corpus.records.reserve(config.record_count);
    for (size_t r = 0; r < config.record_count; ++r) {
        Rng rng(mix_key(config.seed, r + 1));

        // Topic vocabulary: the record's own type subset.
        const size_t topic_size =
            config.topic_types_min + rng.index(config.topic_types_max - config.topic_types_min + 1);
        std::vector<uint32_t> topic;
        topic.reserve(topic_size);
        for (size_t idx : rng.sample_indices(vocab.size() - 1, topic_size)) {
            topic.push_back(static_cast<uint32_t>(idx + 1));
        }
        rng.shuffle(topic);

        // Segment vocabularies are Zipf draws over the topic list, so the
        // topic's head types recur in every segment; token draws are Zipf
        // again within the segment. The heavy repetition is what gives
        // blocks a detectable self-similarity under the synthetic provider.
        auto draw_segment = [&](size_t length, TokenSeq& out) {
            const size_t type_count = std::min<size_t>(
                topic.size(), config.segment_types_min +
                                  rng.index(config.segment_types_max - config.segment_types_min + 1));
            std::vector<uint32_t> types;
            types.reserve(type_count);
            while (types.size() < type_count) {
                const uint32_t candidate = topic[zipf_index(topic.size(), rng)];
                if (std::find(types.begin(), types.end(), candidate) == types.end()) {
                    types.push_back(candidate);
                }
            }
            for (size_t i = 0; i < length; ++i) {
                out.push_back(vocab.token(types[zipf_index(types.size(), rng)]));
            }
        };

        // Reasoning length: log-uniform, optionally aligned to full blocks.
        const double log_lo = std::log(static_cast<double>(config.reasoning_min));
        const double log_hi = std::log(static_cast<double>(config.reasoning_max));
        size_t target = static_cast<size_t>(std::llround(std::exp(rng.uniform(log_lo, log_hi))));
        target = std::clamp(target, config.reasoning_min, config.reasoning_max);
        if (config.align_length_to > 0) {
            const size_t unit = config.align_length_to;
            target = (target + unit - 1) / unit * unit;
        }

        ServiceRecord record;
        record.reasoning.reserve(target);
        while (record.reasoning.size() < target) {
            const size_t want =
                config.segment_len_min +
                rng.index(config.segment_len_max - config.segment_len_min + 1);
            draw_segment(std::min(want, target - record.reasoning.size()), record.reasoning);
        }

        const size_t prompt_len =
            config.prompt_len_min + rng.index(config.prompt_len_max - config.prompt_len_min + 1);
        draw_segment(prompt_len, record.prompt);

        // Answer: order-preserving subsequence of the reasoning tokens.
        size_t answer_len =
            config.answer_len_min + rng.index(config.answer_len_max - config.answer_len_min + 1);
        answer_len = std::min(answer_len, record.reasoning.size());
        for (size_t idx : rng.sample_indices(record.reasoning.size(), answer_len)) {
            record.answer.push_back(record.reasoning[idx]);
        }

        record.reported_reasoning_count = record.reasoning.size();
        record.reported_answer_count = record.answer.size();
        corpus.records.push_back(std::move(record));
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

DsrReport compute_dsr(const std::vector<LabeledVerdict>& verdicts) {
    size_t malicious = 0, malicious_flagged = 0;
    size_t benign = 0, benign_accepted = 0;
    for (const auto& v : verdicts) {
        if (v.inflated) {
            ++malicious;
            if (v.decision == AuditDecision::flagged_for_inflation) ++malicious_flagged;
        } else {
            ++benign;
            if (v.decision == AuditDecision::audit_successful) ++benign_accepted;
        }
    }
    DsrReport report;
    if (malicious > 0) {
        report.dsr_malicious =
            static_cast<double>(malicious_flagged) / static_cast<double>(malicious);
    }
    if (benign > 0) {
        report.dsr_benign = static_cast<double>(benign_accepted) / static_cast<double>(benign);
    }
    return report;
}

double compute_aer(const std::vector<Verdict>& benign_verdicts) {
    if (benign_verdicts.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& v : benign_verdicts) sum += v.exposed_block_fraction;
    return sum / static_cast<double>(benign_verdicts.size());
}

// ---------------------------------------------------------------------------
// Shared scoring helpers
// ---------------------------------------------------------------------------

namespace {

uint64_t sample_count_for_block(uint64_t block_len, uint64_t beta, uint64_t per_block_sample) {
    if (block_len >= beta) return std::min<uint64_t>(per_block_sample, block_len);
    return std::max<uint64_t>(
        1, std::min<uint64_t>(block_len, per_block_sample * block_len / beta));
}

MatchScorePair score_block_pair(const TokenSeq& block_tokens, uint64_t block_index,
                                const Embedding& answer_embedding,
                                const EmbeddingProvider& provider, const MatchingHead& head_tb,
                                const MatchingHead& head_ba, uint64_t sample_count, Rng& rng) {
    const Embedding block_embedding = provider.embed_block(block_tokens);
    std::vector<Embedding> sampled;
    sampled.reserve(sample_count);
    for (size_t offset : rng.sample_indices(block_tokens.size(), sample_count)) {
        sampled.push_back(provider.embed_token(block_tokens[offset]));
    }
    MatchScorePair pair;
    pair.block_index = block_index;
    pair.s_tb = score_token_to_block(head_tb, sampled, block_embedding);
    pair.s_ba = score_block_to_answer(head_ba, block_embedding, answer_embedding);
    return pair;
}

}  // namespace

// ---------------------------------------------------------------------------
// Matching-head dataset
// ---------------------------------------------------------------------------

std::vector<LabeledFeature> build_matching_dataset(const std::vector<ServiceRecord>& corpus,
                                                   const Vocabulary& vocabulary,
                                                   const EmbeddingProvider& provider,
                                                   const MatchingDataConfig& config) {
    if (corpus.empty()) throw std::invalid_argument("build_matching_dataset: empty corpus");
    const bool tb = config.task == HeadKind::token_to_block;
    const std::vector<InflationKind> kinds =
        tb ? std::vector<InflationKind>{InflationKind::naive, InflationKind::ada1,
                                        InflationKind::ada2}
           : std::vector<InflationKind>{InflationKind::ada1, InflationKind::ada2,
                                        InflationKind::ada3, InflationKind::ada4};

    // Shared attack machinery; built once.
    NeighborIndex neighbors(vocabulary, provider, 10);
    const RetrievalIndex retrieval =
        tb ? RetrievalIndex{} : build_retrieval_index(corpus, provider);

    Rng rng(mix_key(config.seed, 0x6d684473));
    std::vector<LabeledFeature> data;
    data.reserve(2 * config.pairs_per_class);
    size_t positives = 0, negatives = 0;

    auto tb_feature = [&](const TokenSeq& block_tokens, const Embedding& block_embedding) {
        const double fraction =
            rng.uniform(config.sample_fraction_min, config.sample_fraction_max);
        const size_t count = std::max<size_t>(
            1, static_cast<size_t>(std::floor(fraction * static_cast<double>(block_tokens.size()))));
        std::vector<Embedding> sampled;
        sampled.reserve(count);
        for (size_t offset : rng.sample_indices(block_tokens.size(), count)) {
            sampled.push_back(provider.embed_token(block_tokens[offset]));
        }
        return build_features(average_embeddings(sampled), block_embedding);
    };

    while (positives < config.pairs_per_class || negatives < config.pairs_per_class) {
        const size_t rec_idx = rng.index(corpus.size());
        const ServiceRecord& record = corpus[rec_idx];
        if (record.reasoning.empty() || record.answer.empty()) continue;
        const uint64_t beta = config.block_sizes[rng.index(config.block_sizes.size())];
        const Embedding answer_embedding = provider.embed_block(record.answer);

        // Inflated side.
        if (positives < config.pairs_per_class) {
            const InflationKind kind = kinds[rng.index(kinds.size())];
            const double ir = config.ratios[rng.index(config.ratios.size())];
            InflationConfig inf_config;
            inf_config.kind = kind;
            const uint64_t inf_seed = rng.next_u64();
            InflatedRecord inflated;
            switch (kind) {
                case InflationKind::naive:
                    inflated = inflate_naive(record, ir, vocabulary, inf_config, inf_seed);
                    break;
                case InflationKind::ada1:
                    inflated = inflate_ada1(record, ir, neighbors, inf_config, inf_seed);
                    break;
                case InflationKind::ada2:
                    inflated = inflate_ada2(record, ir, inf_config, inf_seed);
                    break;
                case InflationKind::ada3:
                    inflated = inflate_ada3(record, ir, corpus, inf_config, inf_seed, rec_idx);
                    break;
                case InflationKind::ada4:
                    inflated = inflate_ada4(record, ir, retrieval, provider, inf_config,
                                            inf_seed, rec_idx);
                    break;
                case InflationKind::misreport:
                    break;
            }
            const auto blocks = partition_trace(inflated.record.reasoning, beta);
            // Contaminated blocks only; lightly touched blocks are ambiguous.
            std::vector<size_t> candidates;
            {
                std::vector<size_t> counts(blocks.size(), 0);
                for (uint64_t pos : inflated.injected_positions) counts[pos / beta]++;
                for (size_t b = 0; b < blocks.size(); ++b) {
                    const double frac = static_cast<double>(counts[b]) /
                                        static_cast<double>(blocks[b].tokens.size());
                    if (frac >= config.min_contamination) candidates.push_back(b);
                }
            }
            if (!candidates.empty()) {
                const size_t take = std::min<size_t>(
                    {candidates.size(), config.pairs_per_class - positives, 3});
                for (size_t i = 0; i < take; ++i) {
                    const Block& block = blocks[candidates[rng.index(candidates.size())]];
                    const Embedding block_embedding = provider.embed_block(block.tokens);
                    LabeledFeature item;
                    item.label = 1;
                    item.feature = tb ? tb_feature(block.tokens, block_embedding)
                                      : build_features(block_embedding, answer_embedding);
                    data.push_back(std::move(item));
                    ++positives;
                }
            }
        }

        // Benign side.
        if (negatives < config.pairs_per_class) {
            const auto blocks = partition_trace(record.reasoning, beta);
            const size_t take = std::min<size_t>(
                {blocks.size(), config.pairs_per_class - negatives, 3});
            for (size_t i = 0; i < take; ++i) {
                const Block& block = blocks[rng.index(blocks.size())];
                const Embedding block_embedding = provider.embed_block(block.tokens);
                LabeledFeature item;
                item.label = 0;
                item.feature = tb ? tb_feature(block.tokens, block_embedding)
                                  : build_features(block_embedding, answer_embedding);
                data.push_back(std::move(item));
                ++negatives;
            }
        }
    }
    return data;
}

// ---------------------------------------------------------------------------
// Verifier dataset
// ---------------------------------------------------------------------------

std::vector<LabeledScoreSet> build_verifier_dataset(const std::vector<ServiceRecord>& corpus,
                                                    const Vocabulary& vocabulary,
                                                    const EmbeddingProvider& provider,
                                                    const MatchingHead& head_tb,
                                                    const MatchingHead& head_ba,
                                                    const VerifierDataConfig& config) {
    if (corpus.empty()) throw std::invalid_argument("build_verifier_dataset: empty corpus");
    NeighborIndex neighbors(vocabulary, provider, 10);
    const std::vector<InflationKind> kinds = {InflationKind::naive, InflationKind::ada1,
                                              InflationKind::ada2, InflationKind::ada3};
    Rng rng(mix_key(config.seed, 0x64735f64));
    const uint64_t beta = config.block_size;
    const uint64_t k_default = std::max<uint64_t>(1, beta / 10);

    std::vector<LabeledScoreSet> data;
    size_t benign_sets = 0, inflated_sets = 0;

    auto emit_sets = [&](const ServiceRecord& record, int label, size_t& counter, size_t quota) {
        const auto blocks = partition_trace(record.reasoning, beta);
        if (blocks.empty()) return;
        const Embedding answer_embedding = provider.embed_block(record.answer);
        std::vector<uint64_t> order(blocks.size());
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        const uint64_t alpha = blocks.size();
        const uint64_t first_round = std::max<uint64_t>(
            1, static_cast<uint64_t>(std::ceil(config.initial_ratio * static_cast<double>(alpha))));
        const uint64_t longest = std::min<uint64_t>(alpha, first_round + 3);

        std::vector<MatchScorePair> prefix;
        prefix.reserve(longest);
        for (uint64_t i = 0; i < longest; ++i) {
            const Block& block = blocks[order[i]];
            const uint64_t k = sample_count_for_block(block.tokens.size(), beta, k_default);
            prefix.push_back(score_block_pair(block.tokens, order[i], answer_embedding, provider,
                                              head_tb, head_ba, k, rng));
        }
        for (uint64_t size : {first_round, std::min(alpha, first_round + 1),
                              std::min(alpha, first_round + 3), uint64_t{1}}) {
            if (counter >= quota) break;
            LabeledScoreSet set;
            set.label = label;
            set.scores.assign(prefix.begin(), prefix.begin() + size);
            data.push_back(std::move(set));
            ++counter;
        }
    };

    while (benign_sets < config.sets_per_class || inflated_sets < config.sets_per_class) {
        const size_t rec_idx = rng.index(corpus.size());
        const ServiceRecord& record = corpus[rec_idx];
        if (record.reasoning.empty() || record.answer.empty()) continue;

        if (benign_sets < config.sets_per_class) {
            emit_sets(record, 1, benign_sets, config.sets_per_class);
        }
        if (inflated_sets < config.sets_per_class) {
            const InflationKind kind = kinds[rng.index(kinds.size())];
            const double ir = config.ratios[rng.index(config.ratios.size())];
            InflationConfig inf_config;
            inf_config.kind = kind;
            const uint64_t inf_seed = rng.next_u64();
            InflatedRecord inflated;
            switch (kind) {
                case InflationKind::naive:
                    inflated = inflate_naive(record, ir, vocabulary, inf_config, inf_seed);
                    break;
                case InflationKind::ada1:
                    inflated = inflate_ada1(record, ir, neighbors, inf_config, inf_seed);
                    break;
                case InflationKind::ada2:
                    inflated = inflate_ada2(record, ir, inf_config, inf_seed);
                    break;
                default:
                    inflated = inflate_ada3(record, ir, corpus, inf_config, inf_seed, rec_idx);
                    break;
            }
            emit_sets(inflated.record, 0, inflated_sets, config.sets_per_class);
        }
    }
    return data;
}

// ---------------------------------------------------------------------------
// Audit traces
// ---------------------------------------------------------------------------

AuditTrace trace_audit_scores(const ServiceRecord& record,
                              std::shared_ptr<const EmbeddingProvider> provider,
                              const MatchingHead& head_tb, const MatchingHead& head_ba,
                              const AuditParams& params, uint64_t seed) {
    // Mirrors run_audit's seeded draw sequence (audit id, block order, then
    // per-block token samples) so a replayed decision loop reproduces the
    // protocol verdict for semantically honest providers.
    AuditTrace trace;
    const uint64_t m = record.reported_reasoning_count;
    const uint64_t beta = params.block_size;
    trace.block_count = (m + beta - 1) / beta;
    if (trace.block_count == 0) return trace;

    Rng rng(mix_key(seed, 0x61756474));
    (void)rng.next_u64();  // audit id draw
    std::vector<uint64_t> order(trace.block_count);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    trace.first_round = std::max<uint64_t>(
        1, static_cast<uint64_t>(
               std::ceil(params.initial_ratio * static_cast<double>(trace.block_count))));

    const auto blocks = partition_trace(record.reasoning, beta);
    const Embedding answer_embedding = provider->embed_block(record.answer);
    for (uint64_t i = 0; i < trace.block_count; ++i) {
        const Block& block = blocks[order[i]];
        const uint64_t k =
            sample_count_for_block(block.tokens.size(), beta, params.per_block_sample);
        trace.scores.push_back(score_block_pair(block.tokens, order[i], answer_embedding,
                                                *provider, head_tb, head_ba, k, rng));
    }
    return trace;
}

Verdict replay_decisions(const AuditTrace& trace, const VerifierRef& verifier,
                         bool cumulative_evidence) {
    Verdict verdict;
    verdict.block_count = trace.block_count;
    if (trace.block_count == 0) {
        verdict.decision = AuditDecision::flagged_for_inflation;
        verdict.failure_reason = FailureReason::semantic_reject_exhausted;
        return verdict;
    }
    uint64_t audited = std::min<uint64_t>(trace.first_round, trace.block_count);
    uint64_t round_begin = 0;
    for (;;) {
        std::span<const MatchScorePair> evidence(trace.scores.data() + round_begin,
                                                 audited - round_begin);
        if (cumulative_evidence) {
            evidence = std::span<const MatchScorePair>(trace.scores.data(), audited);
        }
        RoundDecision decision;
        if (verifier.kind == VerifierKind::rule) {
            decision = rule_verdict(evidence, verifier.tau);
        } else {
            decision = verifier.model->forward(evidence) > verifier.tau ? RoundDecision::accept
                                                                        : RoundDecision::reject;
        }
        if (decision == RoundDecision::accept) {
            verdict.decision = AuditDecision::audit_successful;
            break;
        }
        if (audited == trace.block_count) {
            verdict.decision = AuditDecision::flagged_for_inflation;
            verdict.failure_reason = FailureReason::semantic_reject_exhausted;
            break;
        }
        round_begin = audited;
        ++audited;
    }
    verdict.rounds = audited;
    verdict.semantic_judgments = 2 * audited;
    verdict.exposed_block_fraction =
        static_cast<double>(audited) / static_cast<double>(trace.block_count);
    return verdict;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

ExperimentReport run_experiment(const std::vector<ServiceRecord>& corpus,
                                const Vocabulary& vocabulary,
                                std::shared_ptr<const EmbeddingProvider> provider,
                                const ExperimentArtifacts& artifacts,
                                const ExperimentGrid& grid) {
    if (!artifacts.head_tb || !artifacts.head_ba) {
        throw std::invalid_argument("run_experiment: matching heads are required");
    }
    if (grid.verifier == VerifierKind::learned && !artifacts.deepsets) {
        throw std::invalid_argument("run_experiment: learned verifier needs a DeepSets model");
    }
    const auto started = std::chrono::steady_clock::now();

    const size_t record_count =
        grid.max_records == 0 ? corpus.size() : std::min(grid.max_records, corpus.size());

    VerifierRef verifier;
    verifier.kind = grid.verifier;
    verifier.tau = grid.tau;
    verifier.model = artifacts.deepsets;

    AuditParams params = AuditParams::defaults(grid.verifier, grid.block_size);
    params.threshold = grid.tau;
    params.cumulative_evidence = grid.cumulative_evidence;

    ExperimentReport report;
    report.block_size = grid.block_size;
    report.verifier = grid.verifier == VerifierKind::rule ? "rule" : "learned";
    report.tau = grid.tau;

    auto audit_record = [&](const ServiceRecord& record, uint64_t audit_seed) {
        ProviderSession session(record, provider, grid.block_size);
        InProcessChannel channel(session);
        const AuditorView view = auditor_view_of(record, session.commitment());
        return run_audit(view, channel, *artifacts.head_tb, *artifacts.head_ba, verifier, params,
                         *provider, audit_seed);
    };

    // Benign pass.
    {
        std::vector<Verdict> verdicts;
        size_t accepted = 0;
        double alpha_sum = 0.0, rounds_sum = 0.0;
        for (size_t i = 0; i < record_count; ++i) {
            if (corpus[i].reasoning.empty()) continue;
            const Verdict v = audit_record(corpus[i], mix_key(grid.seed, mix_key(0, i)));
            if (v.decision == AuditDecision::audit_successful) ++accepted;
            alpha_sum += static_cast<double>(v.block_count);
            rounds_sum += static_cast<double>(v.rounds);
            verdicts.push_back(v);
        }
        report.benign_records = verdicts.size();
        report.dsr_benign = verdicts.empty()
                                ? 0.0
                                : static_cast<double>(accepted) / static_cast<double>(verdicts.size());
        report.aer = compute_aer(verdicts);
        report.mean_alpha = verdicts.empty() ? 0.0 : alpha_sum / static_cast<double>(verdicts.size());
        report.mean_rounds =
            verdicts.empty() ? 0.0 : rounds_sum / static_cast<double>(verdicts.size());
    }

    // Attack grid.
    const bool needs_neighbors =
        std::find(grid.kinds.begin(), grid.kinds.end(), InflationKind::ada1) != grid.kinds.end();
    const bool needs_retrieval =
        std::find(grid.kinds.begin(), grid.kinds.end(), InflationKind::ada4) != grid.kinds.end();
    std::optional<NeighborIndex> neighbors;
    if (needs_neighbors) neighbors.emplace(vocabulary, *provider, 10);
    RetrievalIndex retrieval;
    if (needs_retrieval) retrieval = build_retrieval_index(corpus, *provider);

    for (const InflationKind kind : grid.kinds) {
        const std::vector<double> ratios =
            kind == InflationKind::misreport ? std::vector<double>{grid.misreport_multiplier}
                                             : grid.ratios;
        for (const double ir : ratios) {
            ExperimentCell cell;
            cell.kind = kind;
            cell.ir = ir;
            size_t flagged = 0;
            for (size_t i = 0; i < record_count; ++i) {
                const ServiceRecord& record = corpus[i];
                if (record.reasoning.empty()) continue;
                InflationConfig inf_config;
                inf_config.kind = kind;
                const uint64_t cell_seed = mix_key(
                    grid.seed, mix_key(static_cast<uint64_t>(kind) + 1,
                                       mix_key(static_cast<uint64_t>(std::llround(ir * 1000.0)), i)));
                InflatedRecord inflated;
                switch (kind) {
                    case InflationKind::naive:
                        inflated = inflate_naive(record, ir, vocabulary, inf_config, cell_seed);
                        break;
                    case InflationKind::ada1:
                        inflated = inflate_ada1(record, ir, *neighbors, inf_config, cell_seed);
                        break;
                    case InflationKind::ada2:
                        inflated = inflate_ada2(record, ir, inf_config, cell_seed);
                        break;
                    case InflationKind::ada3:
                        inflated = inflate_ada3(record, ir, corpus, inf_config, cell_seed, i);
                        break;
                    case InflationKind::ada4:
                        inflated = inflate_ada4(record, ir, retrieval, *provider, inf_config,
                                                cell_seed, i);
                        break;
                    case InflationKind::misreport:
                        inflated = misreport(record, ir);
                        break;
                }
                const Verdict v = audit_record(inflated.record, mix_key(cell_seed, 0x7665));
                if (v.decision == AuditDecision::flagged_for_inflation) ++flagged;
                ++cell.records;
            }
            cell.dsr_malicious = cell.records == 0
                                     ? 0.0
                                     : static_cast<double>(flagged) / static_cast<double>(cell.records);
            report.cells.push_back(cell);
        }
    }

    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

std::string ExperimentReport::to_json_string() const {
    json cells_json = json::array();
    for (const auto& cell : cells) {
        cells_json.push_back(json{{"kind", to_string(cell.kind)},
                                  {"ir", cell.ir},
                                  {"dsr_malicious", cell.dsr_malicious},
                                  {"records", cell.records}});
    }
    json report{{"cells", cells_json},
                {"benign", json{{"dsr_benign", dsr_benign},
                                {"aer", aer},
                                {"mean_l", mean_rounds},
                                {"mean_alpha", mean_alpha},
                                {"records", benign_records}}},
                {"beta", block_size},
                {"verifier", verifier},
                {"tau", tau},
                {"runtime_seconds", runtime_seconds}};
    return report.dump(2);
}

std::string ExperimentReport::to_csv() const {
    std::ostringstream out;
    out << "kind,ir,beta,verifier,tau,dsr,records,aer,mean_l,mean_alpha\n";
    out << "benign,," << block_size << ',' << verifier << ',' << tau << ',' << dsr_benign << ','
        << benign_records << ',' << aer << ',' << mean_rounds << ',' << mean_alpha << '\n';
    for (const auto& cell : cells) {
        out << to_string(cell.kind) << ',' << cell.ir << ',' << block_size << ',' << verifier
            << ',' << tau << ',' << cell.dsr_malicious << ',' << cell.records << ",,,\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Merkle bench
// ---------------------------------------------------------------------------

std::vector<MerkleBenchRow> bench_merkle(const std::vector<size_t>& token_counts,
                                         const std::vector<size_t>& dimensions, size_t repeats,
                                         uint64_t seed) {
    if (repeats == 0) throw std::invalid_argument("bench_merkle: repeats must be >= 1");
    std::vector<MerkleBenchRow> rows;
    Rng rng(mix_key(seed, 0x62656e63));
    for (const size_t dim : dimensions) {
        for (const size_t count : token_counts) {
            // Prepared fingerprints; the timed section is hashing + tree build.
            std::vector<TokenFingerprint> fingerprints(count);
            for (auto& fp : fingerprints) {
                fp.block_embedding.resize(dim);
                fp.token_embedding.resize(dim);
                for (auto& v : fp.block_embedding) v = static_cast<float>(rng.uniform() - 0.5);
                for (auto& v : fp.token_embedding) v = static_cast<float>(rng.uniform() - 0.5);
            }
            std::vector<double> times;
            times.reserve(repeats);
            for (size_t rep = 0; rep < repeats; ++rep) {
                const auto t0 = std::chrono::steady_clock::now();
                MerkleTree tree = MerkleTree::build(fingerprints);
                const auto t1 = std::chrono::steady_clock::now();
                volatile uint8_t sink = tree.root()[0];
                (void)sink;
                times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
            }
            std::sort(times.begin(), times.end());
            MerkleBenchRow row;
            row.token_count = count;
            row.dimension = dim;
            row.min_ms = times.front();
            row.max_ms = times.back();
            row.median_ms = times[times.size() / 2];
            rows.push_back(row);
        }
    }
    return rows;
}

std::string bench_to_csv(const std::vector<MerkleBenchRow>& rows) {
    std::ostringstream out;
    out << "token_count,dimension,min_ms,median_ms,max_ms\n";
    for (const auto& row : rows) {
        out << row.token_count << ',' << row.dimension << ',' << row.min_ms << ','
            << row.median_ms << ',' << row.max_ms << '\n';
    }
    return out.str();
}

double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("linear_fit_r2: need at least two points");
    }
    const double n = static_cast<double>(x.size());
    const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mean_x) * (x[i] - mean_x);
        sxy += (x[i] - mean_x) * (y[i] - mean_y);
        syy += (y[i] - mean_y) * (y[i] - mean_y);
    }
    if (sxx == 0.0 || syy == 0.0) return 1.0;
    const double slope = sxy / sxx;
    double ss_res = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double fit = mean_y + slope * (x[i] - mean_x);
        ss_res += (y[i] - fit) * (y[i] - fit);
    }
    return 1.0 - ss_res / syy;
}

}  // namespace coin
