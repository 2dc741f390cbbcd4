#include "coin/core.hpp"

#include <cctype>
#include <stdexcept>

namespace coin {

const char* to_string(InflationKind kind) {
    switch (kind) {
        case InflationKind::naive: return "naive";
        case InflationKind::ada1: return "ada1";
        case InflationKind::ada2: return "ada2";
        case InflationKind::ada3: return "ada3";
        case InflationKind::ada4: return "ada4";
        case InflationKind::misreport: return "misreport";
    }
    return "unknown";
}

std::optional<InflationKind> inflation_kind_from_string(std::string_view name) {
    if (name == "naive") return InflationKind::naive;
    if (name == "ada1") return InflationKind::ada1;
    if (name == "ada2") return InflationKind::ada2;
    if (name == "ada3") return InflationKind::ada3;
    if (name == "ada4") return InflationKind::ada4;
    if (name == "misreport") return InflationKind::misreport;
    return std::nullopt;
}

AuditParams AuditParams::defaults(VerifierKind kind, uint64_t block_size) {
    AuditParams params;
    params.block_size = block_size;
    params.initial_ratio = 0.3;
    params.per_block_sample = std::max<uint64_t>(1, block_size / 10);
    params.threshold = kind == VerifierKind::rule ? 0.6 : 0.5;
    params.verifier_kind = kind;
    return params;
}

std::vector<Block> partition_trace(const TokenSeq& reasoning, uint64_t block_size) {
    if (block_size == 0) {
        throw std::invalid_argument("partition_trace: block size must be >= 1");
    }
    std::vector<Block> blocks;
    if (reasoning.empty()) return blocks;
    const uint64_t total = reasoning.size();
    const uint64_t count = (total + block_size - 1) / block_size;
    blocks.reserve(count);
    for (uint64_t j = 0; j < count; ++j) {
        const uint64_t begin = j * block_size;
        const uint64_t end = std::min(total, begin + block_size);
        Block block;
        block.index = j;
        block.tokens.assign(reasoning.begin() + begin, reasoning.begin() + end);
        blocks.push_back(std::move(block));
    }
    return blocks;
}

double inflation_rate(uint64_t original_count, uint64_t injected_count) {
    if (original_count == 0) {
        throw std::invalid_argument("inflation_rate: original count must be >= 1");
    }
    return static_cast<double>(injected_count) / static_cast<double>(original_count);
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() {
    surfaces_.push_back("<unk>");
    index_.emplace("<unk>", kUnknownId);
}

uint32_t Vocabulary::add(const std::string& surface) {
    auto it = index_.find(surface);
    if (it != index_.end()) return it->second;
    const uint32_t id = static_cast<uint32_t>(surfaces_.size());
    surfaces_.push_back(surface);
    index_.emplace(surface, id);
    return id;
}

std::optional<uint32_t> Vocabulary::find(const std::string& surface) const {
    auto it = index_.find(surface);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const std::string& Vocabulary::surface(uint32_t id) const {
    if (id >= surfaces_.size()) {
        throw std::out_of_range("Vocabulary::surface: id out of range");
    }
    return surfaces_[id];
}

// ---------------------------------------------------------------------------
// RuleTokenizer
// ---------------------------------------------------------------------------

RuleTokenizer::RuleTokenizer(std::shared_ptr<const Vocabulary> vocabulary)
    : vocabulary_(std::move(vocabulary)) {
    if (!vocabulary_) {
        throw std::invalid_argument("RuleTokenizer: vocabulary is required");
    }
}

std::vector<std::string> RuleTokenizer::split(std::string_view text) {
    std::vector<std::string> pieces;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            pieces.push_back(current);
            current.clear();
        }
    };
    for (char raw : text) {
        const unsigned char c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            flush();
        } else if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
            pieces.push_back(std::string(1, raw));
        }
    }
    flush();
    return pieces;
}

TokenSeq RuleTokenizer::tokenize(std::string_view text) const {
    TokenSeq tokens;
    for (auto& piece : split(text)) {
        const auto id = vocabulary_->find(piece);
        tokens.push_back(Token{id.value_or(Vocabulary::kUnknownId), std::move(piece)});
    }
    return tokens;
}

std::string RuleTokenizer::detokenize(const TokenSeq& tokens) const {
    std::string text;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) text.push_back(' ');
        text += tokens[i].surface;
    }
    return text;
}

}  // namespace coin
