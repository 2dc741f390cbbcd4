#include "coin/corpus.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace coin {

using nlohmann::json;

std::vector<CorpusRecord> load_corpus_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);
    std::vector<CorpusRecord> records;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) {
            throw std::runtime_error("bad corpus row at line " + std::to_string(line_no));
        }
        CorpusRecord rec;
        rec.prompt = row.at("prompt").get<std::string>();
        rec.reasoning = row.at("reasoning").get<std::string>();
        rec.answer = row.at("answer").get<std::string>();
        rec.m = row.at("m").get<uint64_t>();
        rec.n = row.at("n").get<uint64_t>();
        rec.label = row.at("label").get<std::string>();
        if (row.contains("kind")) rec.kind = row["kind"].get<std::string>();
        if (row.contains("ir")) rec.ir = row["ir"].get<double>();
        if (row.contains("injected_positions")) {
            rec.injected_positions = row["injected_positions"].get<std::vector<uint64_t>>();
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void save_corpus_jsonl(const std::string& path, const std::vector<CorpusRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write corpus file: " + path);
    for (const auto& rec : records) {
        json row{{"prompt", rec.prompt}, {"reasoning", rec.reasoning},
                 {"answer", rec.answer}, {"m", rec.m},
                 {"n", rec.n},           {"label", rec.label}};
        if (rec.kind) row["kind"] = *rec.kind;
        if (rec.ir) row["ir"] = *rec.ir;
        if (!rec.injected_positions.empty()) row["injected_positions"] = rec.injected_positions;
        out << row.dump() << '\n';
    }
}

ServiceRecord to_service_record(const CorpusRecord& row, const Tokenizer& tokenizer) {
    ServiceRecord record;
    record.prompt = tokenizer.tokenize(row.prompt);
    record.reasoning = tokenizer.tokenize(row.reasoning);
    record.answer = tokenizer.tokenize(row.answer);
    record.reported_reasoning_count = row.m;
    record.reported_answer_count = row.n;
    if (record.answer.size() != row.n) {
        throw std::runtime_error("corpus row: n does not match tokenized answer length");
    }
    if (row.label == "inflated") {
        record.label.inflated = true;
        if (row.kind) record.label.kind = inflation_kind_from_string(*row.kind);
    } else if (row.label != "benign") {
        throw std::runtime_error("corpus row: unknown label " + row.label);
    }
    return record;
}

CorpusRecord to_corpus_record(const ServiceRecord& record, const Tokenizer& tokenizer) {
    CorpusRecord row;
    row.prompt = tokenizer.detokenize(record.prompt);
    row.reasoning = tokenizer.detokenize(record.reasoning);
    row.answer = tokenizer.detokenize(record.answer);
    row.m = record.reported_reasoning_count;
    row.n = record.reported_answer_count;
    row.label = record.label.inflated ? "inflated" : "benign";
    if (record.label.kind) row.kind = to_string(*record.label.kind);
    return row;
}

void save_vocabulary(const std::string& path, const Vocabulary& vocabulary) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write vocabulary file: " + path);
    json surfaces = json::array();
    for (uint32_t id = 0; id < vocabulary.size(); ++id) {
        surfaces.push_back(vocabulary.surface(id));
    }
    out << surfaces.dump() << '\n';
}

std::shared_ptr<Vocabulary> load_vocabulary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
    json surfaces = json::parse(in);
    auto vocab = std::make_shared<Vocabulary>();
    for (size_t i = 1; i < surfaces.size(); ++i) {
        vocab->add(surfaces[i].get<std::string>());
    }
    return vocab;
}

std::shared_ptr<Vocabulary> build_vocabulary(const std::vector<CorpusRecord>& records) {
    auto vocab = std::make_shared<Vocabulary>();
    for (const auto& rec : records) {
        for (const auto* text : {&rec.prompt, &rec.reasoning, &rec.answer}) {
            for (const auto& piece : RuleTokenizer::split(*text)) {
                vocab->add(piece);
            }
        }
    }
    return vocab;
}

}  // namespace coin
