#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coin/core.hpp"

namespace coin {

// One JSON-lines corpus row. Text fields are raw strings; token sequences
// are produced on load with the active tokenizer.
struct CorpusRecord {
    std::string prompt;
    std::string reasoning;
    std::string answer;
    uint64_t m = 0;
    uint64_t n = 0;
    std::string label = "benign";  // "benign" | "inflated"
    std::optional<std::string> kind;
    std::optional<double> ir;
    std::vector<uint64_t> injected_positions;
};

std::vector<CorpusRecord> load_corpus_jsonl(const std::string& path);
void save_corpus_jsonl(const std::string& path, const std::vector<CorpusRecord>& records);

// Tokenizes a corpus row. Validates that n matches the tokenized answer.
ServiceRecord to_service_record(const CorpusRecord& row, const Tokenizer& tokenizer);

CorpusRecord to_corpus_record(const ServiceRecord& record, const Tokenizer& tokenizer);

// Vocabulary persistence (JSON array of surfaces; index 0 is the unknown
// token) and deterministic construction from corpus text.
void save_vocabulary(const std::string& path, const Vocabulary& vocabulary);
std::shared_ptr<Vocabulary> load_vocabulary(const std::string& path);
std::shared_ptr<Vocabulary> build_vocabulary(const std::vector<CorpusRecord>& records);

}  // namespace coin
