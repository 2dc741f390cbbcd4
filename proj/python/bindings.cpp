#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coin/harness.hpp"

namespace py = pybind11;
using namespace coin;

namespace {

std::vector<uint8_t> to_bytes(const py::bytes& data) {
    const std::string view = data;
    return std::vector<uint8_t>(view.begin(), view.end());
}

py::bytes from_bytes(const std::vector<uint8_t>& data) {
    return py::bytes(reinterpret_cast<const char*>(data.data()), data.size());
}

MerklePath path_from_pairs(const std::vector<std::pair<std::string, std::string>>& steps) {
    MerklePath path;
    for (const auto& [hex, pos] : steps) {
        const auto hash = hash_from_hex(hex);
        if (!hash || (pos != "left" && pos != "right")) {
            throw std::invalid_argument("malformed merkle path step");
        }
        path.steps.push_back(PathStep{*hash, pos == "left" ? Side::left : Side::right});
    }
    return path;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "verifiable token-count auditing toolkit";

    // ---- core ----
    py::class_<Token>(m, "Token")
        .def(py::init<uint32_t, std::string>(), py::arg("id"), py::arg("surface"))
        .def_readwrite("id", &Token::id)
        .def_readwrite("surface", &Token::surface)
        .def("__repr__", [](const Token& t) {
            return "Token(" + std::to_string(t.id) + ", '" + t.surface + "')";
        });

    py::class_<Vocabulary, std::shared_ptr<Vocabulary>>(m, "Vocabulary")
        .def(py::init<>())
        .def("add", &Vocabulary::add)
        .def("find", [](const Vocabulary& v, const std::string& s) { return v.find(s); })
        .def("surface", &Vocabulary::surface)
        .def("__len__", &Vocabulary::size);

    py::class_<RuleTokenizer>(m, "RuleTokenizer")
        .def(py::init<std::shared_ptr<const Vocabulary>>())
        .def("tokenize",
             [](const RuleTokenizer& t, const std::string& text) { return t.tokenize(text); })
        .def("detokenize", &RuleTokenizer::detokenize);

    py::class_<ServiceRecord>(m, "ServiceRecord")
        .def(py::init<>())
        .def_readwrite("prompt", &ServiceRecord::prompt)
        .def_readwrite("reasoning", &ServiceRecord::reasoning)
        .def_readwrite("answer", &ServiceRecord::answer)
        .def_readwrite("m", &ServiceRecord::reported_reasoning_count)
        .def_readwrite("n", &ServiceRecord::reported_answer_count);

    m.def("partition_trace", &partition_trace, py::arg("reasoning"), py::arg("block_size"));
    py::class_<Block>(m, "Block")
        .def_readonly("index", &Block::index)
        .def_readonly("tokens", &Block::tokens);
    m.def("inflation_rate", &inflation_rate);

    // ---- embedding ----
    py::class_<EmbeddingProvider, std::shared_ptr<EmbeddingProvider>>(m, "EmbeddingProvider")
        .def("dimension", &EmbeddingProvider::dimension)
        .def("embed_token", &EmbeddingProvider::embed_token)
        .def("embed_block", &EmbeddingProvider::embed_block);
    py::class_<SyntheticProvider, EmbeddingProvider, std::shared_ptr<SyntheticProvider>>(
        m, "SyntheticProvider")
        .def(py::init<uint64_t, size_t>(), py::arg("seed"), py::arg("dimension") = 384);
    m.def("cosine_similarity",
          [](const Embedding& a, const Embedding& b) { return cosine_similarity(a, b); });
    m.def("average_embeddings", &average_embeddings);

    // ---- fingerprints and merkle ----
    py::class_<TokenFingerprint>(m, "TokenFingerprint")
        .def(py::init(&make_fingerprint), py::arg("block_embedding"), py::arg("token_embedding"))
        .def_readonly("block_embedding", &TokenFingerprint::block_embedding)
        .def_readonly("token_embedding", &TokenFingerprint::token_embedding)
        .def("serialize", [](const TokenFingerprint& fp) { return from_bytes(fp.serialize()); })
        .def_static("deserialize", [](const py::bytes& data, size_t dimension) {
            return TokenFingerprint::deserialize(to_bytes(data), dimension);
        });

    py::class_<MerkleTree>(m, "MerkleTree")
        .def_static("build", &MerkleTree::build)
        .def("root_hex", [](const MerkleTree& t) { return to_hex(t.root()); })
        .def("leaf_count", &MerkleTree::leaf_count)
        .def("padded_count", &MerkleTree::padded_count)
        .def("prove", [](const MerkleTree& t, size_t index) {
            std::vector<std::pair<std::string, std::string>> steps;
            for (const auto& step : t.prove(index).steps) {
                steps.emplace_back(to_hex(step.sibling),
                                   step.side == Side::left ? "left" : "right");
            }
            return steps;
        });
    m.def("verify_proof",
          [](const std::string& root_hex, const py::bytes& fingerprint,
             const std::vector<std::pair<std::string, std::string>>& steps) {
              const auto root = hash_from_hex(root_hex);
              if (!root) return false;
              MerklePath path;
              try {
                  path = path_from_pairs(steps);
              } catch (const std::invalid_argument&) {
                  return false;
              }
              return verify_proof(*root, to_bytes(fingerprint), path);
          });
    m.def("sha256_hex", [](const py::bytes& data) { return to_hex(sha256(to_bytes(data))); });

    // ---- matching ----
    m.def("build_features", &build_features);
    m.def("focal_loss", &focal_loss, py::arg("p"), py::arg("label"), py::arg("gamma_f") = 2.0,
          py::arg("alpha_f") = 0.25);
    py::enum_<HeadKind>(m, "HeadKind")
        .value("token_to_block", HeadKind::token_to_block)
        .value("block_to_answer", HeadKind::block_to_answer);
    py::class_<MatchingHead>(m, "MatchingHead")
        .def(py::init<HeadKind, size_t, size_t>(), py::arg("kind"), py::arg("embedding_dim"),
             py::arg("hidden") = 384)
        .def("forward", &MatchingHead::forward)
        .def("inflated_probability", &MatchingHead::inflated_probability)
        .def("save", &MatchingHead::save)
        .def_static("load", &MatchingHead::load);
    m.def(
        "train_matching_head",
        [](HeadKind kind, size_t embedding_dim,
           const std::vector<std::pair<MatchFeature, int>>& data, double learning_rate,
           size_t epochs, size_t batch_size, uint64_t train_seed, size_t hidden) {
            std::vector<LabeledFeature> labeled;
            labeled.reserve(data.size());
            for (const auto& [feature, label] : data) {
                labeled.push_back(LabeledFeature{feature, label});
            }
            TrainConfig config;
            config.learning_rate = learning_rate;
            config.epochs = epochs;
            config.batch_size = batch_size;
            config.seed = train_seed;
            return train_matching_head(kind, embedding_dim, labeled, config, hidden);
        },
        py::arg("kind"), py::arg("embedding_dim"), py::arg("data"),
        py::arg("learning_rate") = 2e-5, py::arg("epochs") = 3, py::arg("batch_size") = 128,
        py::arg("seed") = 42, py::arg("hidden") = 384);
    m.def("score_token_to_block", &score_token_to_block);
    m.def("score_block_to_answer", &score_block_to_answer);

    // ---- verifier ----
    py::class_<MatchScorePair>(m, "MatchScorePair")
        .def(py::init<double, double, uint64_t>(), py::arg("s_tb"), py::arg("s_ba"),
             py::arg("block_index") = 0)
        .def_readwrite("s_tb", &MatchScorePair::s_tb)
        .def_readwrite("s_ba", &MatchScorePair::s_ba);
    m.def("rule_verdict", [](const std::vector<MatchScorePair>& scores, double tau) {
        return rule_verdict(scores, tau) == RoundDecision::accept;
    });
    py::class_<DeepSetsModel>(m, "DeepSetsModel")
        .def(py::init<size_t>(), py::arg("hidden") = 256)
        .def("forward",
             [](const DeepSetsModel& model, const std::vector<MatchScorePair>& scores) {
                 return model.forward(scores);
             })
        .def("save", &DeepSetsModel::save)
        .def_static("load", &DeepSetsModel::load);

    // ---- inflation ----
    py::enum_<InflationKind>(m, "InflationKind")
        .value("naive", InflationKind::naive)
        .value("ada1", InflationKind::ada1)
        .value("ada2", InflationKind::ada2)
        .value("ada3", InflationKind::ada3)
        .value("ada4", InflationKind::ada4)
        .value("misreport", InflationKind::misreport);
    py::class_<InflatedRecord>(m, "InflatedRecord")
        .def_readonly("record", &InflatedRecord::record)
        .def_readonly("injected_token_count", &InflatedRecord::injected_token_count)
        .def_readonly("kind", &InflatedRecord::kind)
        .def_readonly("achieved_ir", &InflatedRecord::achieved_ir)
        .def_readonly("injected_positions", &InflatedRecord::injected_positions);
    m.def(
        "inflate_naive",
        [](const ServiceRecord& record, double ir, const Vocabulary& vocabulary, uint64_t seed) {
            return inflate_naive(record, ir, vocabulary, InflationConfig{}, seed);
        },
        py::arg("record"), py::arg("ir"), py::arg("vocabulary"), py::arg("seed") = 42);
    m.def(
        "inflate_ada2",
        [](const ServiceRecord& record, double ir, uint64_t seed) {
            return inflate_ada2(record, ir, InflationConfig{}, seed);
        },
        py::arg("record"), py::arg("ir"), py::arg("seed") = 42);
    m.def("misreport", &misreport, py::arg("record"), py::arg("multiplier"));

    // ---- protocol ----
    py::enum_<AuditDecision>(m, "AuditDecision")
        .value("audit_successful", AuditDecision::audit_successful)
        .value("flagged_for_inflation", AuditDecision::flagged_for_inflation);
    py::class_<Verdict>(m, "Verdict")
        .def_readonly("decision", &Verdict::decision)
        .def_readonly("rounds", &Verdict::rounds)
        .def_readonly("merkle_proofs_checked", &Verdict::merkle_proofs_checked)
        .def_readonly("semantic_judgments", &Verdict::semantic_judgments)
        .def_readonly("block_count", &Verdict::block_count)
        .def_readonly("exposed_block_fraction", &Verdict::exposed_block_fraction)
        .def("__repr__", [](const Verdict& v) {
            return std::string("Verdict(") + to_string(v.decision) +
                   ", l=" + std::to_string(v.rounds) + ")";
        });
    py::class_<ProviderSession>(m, "ProviderSession")
        .def(py::init<ServiceRecord, std::shared_ptr<const EmbeddingProvider>, uint64_t,
                      std::string>(),
             py::arg("record"), py::arg("provider"), py::arg("block_size") = 256,
             py::arg("provider_id") = "cola")
        .def("commitment_root_hex",
             [](const ProviderSession& s) { return to_hex(s.commitment().root); })
        .def("claimed_count",
             [](const ProviderSession& s) { return s.commitment().claimed_count; });
    m.def(
        "audit_record",
        [](const ServiceRecord& record, std::shared_ptr<const EmbeddingProvider> provider,
           const MatchingHead& head_tb, const MatchingHead& head_ba, const std::string& verifier,
           double tau, uint64_t block_size, double gamma, bool cumulative, uint64_t seed,
           const DeepSetsModel* deepsets) {
            const VerifierKind kind =
                verifier == "learned" ? VerifierKind::learned : VerifierKind::rule;
            AuditParams params = AuditParams::defaults(kind, block_size);
            params.initial_ratio = gamma;
            params.cumulative_evidence = cumulative;
            if (tau >= 0.0) params.threshold = tau;
            ProviderSession session(record, provider, block_size);
            InProcessChannel channel(session);
            VerifierRef ref{kind, params.threshold, deepsets};
            return run_audit(auditor_view_of(record, session.commitment()), channel, head_tb,
                             head_ba, ref, params, *provider, seed);
        },
        py::arg("record"), py::arg("provider"), py::arg("head_tb"), py::arg("head_ba"),
        py::arg("verifier") = "rule", py::arg("tau") = -1.0, py::arg("block_size") = 256,
        py::arg("gamma") = 0.3, py::arg("cumulative") = true, py::arg("seed") = 42,
        py::arg("deepsets") = nullptr);
    m.def("audit_cost", &audit_cost, py::arg("rounds"), py::arg("per_block_sample"));

    // ---- harness ----
    py::class_<SyntheticCorpusConfig>(m, "SyntheticCorpusConfig")
        .def(py::init<>())
        .def_readwrite("record_count", &SyntheticCorpusConfig::record_count)
        .def_readwrite("vocabulary_size", &SyntheticCorpusConfig::vocabulary_size)
        .def_readwrite("reasoning_min", &SyntheticCorpusConfig::reasoning_min)
        .def_readwrite("reasoning_max", &SyntheticCorpusConfig::reasoning_max)
        .def_readwrite("seed", &SyntheticCorpusConfig::seed);
    py::class_<SyntheticCorpus>(m, "SyntheticCorpus")
        .def_readonly("vocabulary", &SyntheticCorpus::vocabulary)
        .def_readonly("records", &SyntheticCorpus::records);
    m.def("generate_corpus", &generate_corpus);
    m.def("bench_merkle", &bench_merkle, py::arg("token_counts"), py::arg("dimensions"),
          py::arg("repeats") = 3, py::arg("seed") = 42);
    py::class_<MerkleBenchRow>(m, "MerkleBenchRow")
        .def_readonly("token_count", &MerkleBenchRow::token_count)
        .def_readonly("dimension", &MerkleBenchRow::dimension)
        .def_readonly("median_ms", &MerkleBenchRow::median_ms);
}
