#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coin/inflation.hpp"
#include "coin/matching.hpp"
#include "coin/protocol.hpp"
#include "coin/verifier.hpp"

namespace coin {

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

// Desk-scale stand-in for reasoning-trace data. Each record draws a topic
// vocabulary; reasoning is a chain of segments, each reusing a small
// segment-local type set (so blocks have lexical cohesion); the answer is an
// order-preserving subsequence of the reasoning, which gives benign data a
// block-to-answer signal. Reasoning lengths are log-uniform.
struct SyntheticCorpusConfig {
    size_t record_count = 1000;
    size_t vocabulary_size = 8000;
    size_t topic_types_min = 60, topic_types_max = 150;
    size_t reasoning_min = 512, reasoning_max = 8192;
    size_t segment_len_min = 128, segment_len_max = 320;
    size_t segment_types_min = 8, segment_types_max = 20;
    size_t prompt_len_min = 32, prompt_len_max = 96;
    size_t answer_len_min = 48, answer_len_max = 128;
    // When set, reasoning lengths are rounded up to a multiple of this, so
    // every block is full (used by the protocol cost fixtures).
    size_t align_length_to = 0;
    uint64_t seed = 42;
};

struct SyntheticCorpus {
    std::shared_ptr<Vocabulary> vocabulary;
    std::vector<ServiceRecord> records;
};

SyntheticCorpus generate_corpus(const SyntheticCorpusConfig& config);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct LabeledVerdict {
    AuditDecision decision = AuditDecision::flagged_for_inflation;
    bool inflated = false;
};

struct DsrReport {
    std::optional<double> dsr_malicious;  // flagged fraction of inflated records
    std::optional<double> dsr_benign;     // accepted fraction of benign records
};

DsrReport compute_dsr(const std::vector<LabeledVerdict>& verdicts);

// Mean exposed block fraction over benign sessions.
double compute_aer(const std::vector<Verdict>& benign_verdicts);

// ---------------------------------------------------------------------------
// Training-set builders
// ---------------------------------------------------------------------------

struct MatchingDataConfig {
    HeadKind task = HeadKind::token_to_block;
    size_t pairs_per_class = 10000;
    std::vector<uint64_t> block_sizes = {256, 512, 1024};
    std::vector<double> ratios = {0.5, 1.0, 2.0, 3.0};
    // Sampling fraction range for token-to-block features.
    double sample_fraction_min = 0.03125, sample_fraction_max = 0.125;
    // Inflated-side samples come from blocks at least this contaminated.
    double min_contamination = 0.35;
    uint64_t seed = 42;
};

// Benign pairs (label 0) from clean records; inflated pairs (label 1) from
// contaminated blocks of inflated variants, mixed 1:1. Token-to-block uses
// {naive, ada1, ada2}; block-to-answer uses {ada1..ada4}.
std::vector<LabeledFeature> build_matching_dataset(const std::vector<ServiceRecord>& corpus,
                                                   const Vocabulary& vocabulary,
                                                   const EmbeddingProvider& provider,
                                                   const MatchingDataConfig& config);

struct VerifierDataConfig {
    size_t sets_per_class = 1000;
    double initial_ratio = 0.3;
    uint64_t block_size = 256;
    std::vector<double> ratios = {0.5, 1.0, 2.0, 3.0};
    uint64_t seed = 42;
};

// Labeled evidence sets (benign = 1) shaped like audit evidence: the
// round-one prefix plus a few grown prefixes per record, scored with the
// trained heads. Keep this corpus disjoint from the matching-head data.
std::vector<LabeledScoreSet> build_verifier_dataset(const std::vector<ServiceRecord>& corpus,
                                                    const Vocabulary& vocabulary,
                                                    const EmbeddingProvider& provider,
                                                    const MatchingHead& head_tb,
                                                    const MatchingHead& head_ba,
                                                    const VerifierDataConfig& config);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ExperimentGrid {
    std::vector<InflationKind> kinds = {InflationKind::naive};
    std::vector<double> ratios = {0.1, 0.3, 0.5, 1.0, 2.0, 3.0};
    uint64_t block_size = 256;
    VerifierKind verifier = VerifierKind::rule;
    double tau = 0.6;
    bool cumulative_evidence = true;
    double misreport_multiplier = 2.0;
    size_t max_records = 0;  // 0 = whole corpus
    uint64_t seed = 42;
};

struct ExperimentCell {
    InflationKind kind = InflationKind::naive;
    double ir = 0.0;
    double dsr_malicious = 0.0;
    size_t records = 0;
};

struct ExperimentReport {
    std::vector<ExperimentCell> cells;
    double dsr_benign = 0.0;
    double aer = 0.0;
    double mean_rounds = 0.0;
    double mean_alpha = 0.0;
    size_t benign_records = 0;
    uint64_t block_size = 256;
    std::string verifier;
    double tau = 0.6;
    double runtime_seconds = 0.0;

    std::string to_json_string() const;
    std::string to_csv() const;
};

struct ExperimentArtifacts {
    const MatchingHead* head_tb = nullptr;
    const MatchingHead* head_ba = nullptr;
    const DeepSetsModel* deepsets = nullptr;  // required for learned verifier
};

// Full pipeline per record and grid cell: inflate, commit, audit, verdict.
ExperimentReport run_experiment(const std::vector<ServiceRecord>& corpus,
                                const Vocabulary& vocabulary,
                                std::shared_ptr<const EmbeddingProvider> provider,
                                const ExperimentArtifacts& artifacts,
                                const ExperimentGrid& grid);

// Scores every block of a record's audit order once, so verdicts for many
// thresholds or verifiers can be replayed without re-running the protocol.
struct AuditTrace {
    std::vector<MatchScorePair> scores;  // in audit visit order, one per block
    uint64_t block_count = 0;            // alpha
    uint64_t first_round = 0;            // ceil(gamma * alpha)
};

AuditTrace trace_audit_scores(const ServiceRecord& record,
                              std::shared_ptr<const EmbeddingProvider> provider,
                              const MatchingHead& head_tb, const MatchingHead& head_ba,
                              const AuditParams& params, uint64_t seed);

// Replays the decision loop over a trace; mirrors run_audit's verdict for
// semantically honest providers.
Verdict replay_decisions(const AuditTrace& trace, const VerifierRef& verifier,
                         bool cumulative_evidence);

// ---------------------------------------------------------------------------
// Merkle bench
// ---------------------------------------------------------------------------

struct MerkleBenchRow {
    size_t token_count = 0;
    size_t dimension = 0;
    double min_ms = 0.0, median_ms = 0.0, max_ms = 0.0;
};

// Wall-clock cost of leaf hashing plus tree construction over prepared
// fingerprints, single-threaded.
std::vector<MerkleBenchRow> bench_merkle(const std::vector<size_t>& token_counts,
                                         const std::vector<size_t>& dimensions,
                                         size_t repeats, uint64_t seed);

std::string bench_to_csv(const std::vector<MerkleBenchRow>& rows);

// Least-squares fit quality of median time vs token count (criterion for
// linear growth).
double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace coin
