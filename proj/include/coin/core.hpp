#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace coin {

// ---------------------------------------------------------------------------
// Tokens and records
// ---------------------------------------------------------------------------

struct Token {
    uint32_t id = 0;
    std::string surface;

    bool operator==(const Token&) const = default;
};

using TokenSeq = std::vector<Token>;

enum class InflationKind { naive, ada1, ada2, ada3, ada4, misreport };

const char* to_string(InflationKind kind);
std::optional<InflationKind> inflation_kind_from_string(std::string_view name);

struct RecordLabel {
    bool inflated = false;
    std::optional<InflationKind> kind;  // set when inflated
};

// One service interaction: prompt P, hidden reasoning R, answer A, and the
// billing report (m, n). For benign records m == |R|; a misreporting
// provider sets m above the token count it can actually exhibit.
struct ServiceRecord {
    TokenSeq prompt;
    TokenSeq reasoning;
    TokenSeq answer;
    uint64_t reported_reasoning_count = 0;  // m
    uint64_t reported_answer_count = 0;     // n
    RecordLabel label;
};

struct Block {
    uint64_t index = 0;
    TokenSeq tokens;
};

enum class VerifierKind { rule, learned };

// Audit knobs: block size beta, initial sampling ratio gamma, tokens sampled
// per audited block k, acceptance threshold tau.
struct AuditParams {
    uint64_t block_size = 256;
    double initial_ratio = 0.3;
    uint64_t per_block_sample = 25;
    double threshold = 0.6;
    VerifierKind verifier_kind = VerifierKind::rule;
    // When true the verifier judges all scores gathered so far; when false it
    // sees only the current round, matching the literal multi-round loop.
    bool cumulative_evidence = true;

    static AuditParams defaults(VerifierKind kind, uint64_t block_size = 256);
};

// Block size presets the command line accepts; the library itself only
// requires block_size >= 1 so tests can run tiny configurations.
inline constexpr uint64_t kBlockSizePresets[] = {256, 512, 1024};

// ---------------------------------------------------------------------------
// Core operations
// ---------------------------------------------------------------------------

// Splits reasoning into ceil(|R| / block_size) order-preserving blocks; all
// blocks except possibly the last hold exactly block_size tokens.
std::vector<Block> partition_trace(const TokenSeq& reasoning, uint64_t block_size);

// injected / original. original_count must be >= 1.
double inflation_rate(uint64_t original_count, uint64_t injected_count);

// ---------------------------------------------------------------------------
// Tokenizer contract
// ---------------------------------------------------------------------------

class Vocabulary {
public:
    Vocabulary();

    static constexpr uint32_t kUnknownId = 0;

    uint32_t add(const std::string& surface);  // idempotent
    std::optional<uint32_t> find(const std::string& surface) const;
    const std::string& surface(uint32_t id) const;
    size_t size() const { return surfaces_.size(); }

    Token token(uint32_t id) const { return Token{id, surface(id)}; }

private:
    std::vector<std::string> surfaces_;
    std::unordered_map<std::string, uint32_t> index_;
};

// Implementations must be deterministic and guarantee that
// detokenize(tokenize(text)) re-tokenizes to the same id sequence.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual TokenSeq tokenize(std::string_view text) const = 0;
    virtual std::string detokenize(const TokenSeq& tokens) const = 0;
};

// Default tokenizer: lowercases, splits alphanumeric runs, emits every other
// non-space character as a single-character token. Ids come from a fixed
// vocabulary; unknown surfaces map to id 0.
class RuleTokenizer final : public Tokenizer {
public:
    explicit RuleTokenizer(std::shared_ptr<const Vocabulary> vocabulary);

    TokenSeq tokenize(std::string_view text) const override;
    std::string detokenize(const TokenSeq& tokens) const override;

    const Vocabulary& vocabulary() const { return *vocabulary_; }

    // Splitting rule without vocabulary lookup, used to build vocabularies.
    static std::vector<std::string> split(std::string_view text);

private:
    std::shared_ptr<const Vocabulary> vocabulary_;
};

}  // namespace coin
