// Command-line surface for the auditing toolkit: corpus generation,
// inflation, training, commitments, audits, experiment grids, and the
// Merkle bench.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "coin/corpus.hpp"
#include "coin/harness.hpp"
#include "coin/rng.hpp"

using namespace coin;
using nlohmann::json;

namespace {

// Accepts both TOML-style key=value files (CLI11's native format) and JSON
// objects; nested objects map to subcommand sections.
class JsonAwareConfig : public CLI::ConfigTOML {
public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::stringstream buffer;
        buffer << input.rdbuf();
        std::string text = buffer.str();
        const size_t first = text.find_first_not_of(" \t\r\n");
        if (first == std::string::npos || text[first] != '{') {
            std::istringstream replay(text);
            return CLI::ConfigTOML::from_config(replay);
        }
        const json parsed = json::parse(text);
        std::vector<CLI::ConfigItem> items;
        auto add = [&items](std::vector<std::string> parents, const std::string& name,
                            const json& value) {
            CLI::ConfigItem item;
            item.parents = std::move(parents);
            item.name = name;
            if (value.is_array()) {
                for (const auto& v : value) {
                    item.inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
                }
            } else {
                item.inputs.push_back(value.is_string() ? value.get<std::string>()
                                                        : value.dump());
            }
            items.push_back(std::move(item));
        };
        for (const auto& [key, value] : parsed.items()) {
            if (value.is_object()) {
                for (const auto& [sub_key, sub_value] : value.items()) {
                    add({key}, sub_key, sub_value);
                }
            } else {
                add({}, key, value);
            }
        }
        return items;
    }
};

struct CorpusInput {
    std::shared_ptr<Vocabulary> vocabulary;
    std::unique_ptr<RuleTokenizer> tokenizer;
    std::vector<ServiceRecord> records;
};

CorpusInput load_corpus(const std::string& corpus_path, const std::string& vocab_path) {
    CorpusInput input;
    const auto rows = load_corpus_jsonl(corpus_path);
    input.vocabulary = vocab_path.empty() ? build_vocabulary(rows) : load_vocabulary(vocab_path);
    input.tokenizer = std::make_unique<RuleTokenizer>(input.vocabulary);
    input.records.reserve(rows.size());
    for (const auto& row : rows) {
        input.records.push_back(to_service_record(row, *input.tokenizer));
    }
    return input;
}

std::vector<InflationKind> parse_kinds(const std::vector<std::string>& names) {
    std::vector<InflationKind> kinds;
    for (const auto& name : names) {
        const auto kind = inflation_kind_from_string(name);
        if (!kind) throw CLI::ValidationError("--kinds", "unknown inflation kind: " + name);
        kinds.push_back(*kind);
    }
    return kinds;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"verifiable token-count auditing toolkit"};
    app.config_formatter(std::make_shared<JsonAwareConfig>());
    app.set_config("--config", "", "TOML or JSON configuration file");
    app.require_subcommand(1);

    uint64_t seed = 42;
    app.add_option("--seed", seed, "global random seed")->capture_default_str();
    uint64_t provider_seed = 1000003;
    app.add_option("--provider-seed", provider_seed, "designated embedding provider seed")
        ->capture_default_str();
    size_t dimension = 384;
    app.add_option("--dim", dimension, "embedding dimension")->capture_default_str();

    const std::vector<uint64_t> beta_presets(std::begin(kBlockSizePresets),
                                             std::end(kBlockSizePresets));

    // ---- gen-corpus ----
    auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic benign corpus");
    SyntheticCorpusConfig corpus_config;
    std::string gen_out, gen_vocab_out;
    gen->add_option("--records", corpus_config.record_count, "corpus size")
        ->capture_default_str();
    gen->add_option("--vocab-size", corpus_config.vocabulary_size, "global vocabulary size")
        ->capture_default_str();
    gen->add_option("--len-min", corpus_config.reasoning_min, "minimum reasoning length")
        ->capture_default_str();
    gen->add_option("--len-max", corpus_config.reasoning_max, "maximum reasoning length")
        ->capture_default_str();
    gen->add_option("--align-block", corpus_config.align_length_to,
                    "round reasoning lengths up to a multiple of this");
    gen->add_option("--out", gen_out, "corpus JSONL path")->required();
    gen->add_option("--vocab-out", gen_vocab_out, "vocabulary JSON path")->required();

    // ---- inflate ----
    auto* inflate = app.add_subcommand("inflate", "produce inflated variants of a corpus");
    std::string inf_corpus, inf_vocab, inf_out, inf_kind = "naive", inf_anchor = "R",
                inf_mode = "interleave";
    InflationConfig inflation_config;
    inflate->add_option("--corpus", inf_corpus, "input corpus JSONL")->required();
    inflate->add_option("--vocab", inf_vocab, "vocabulary JSON");
    inflate->add_option("--kind", inf_kind, "naive|ada1|ada2|ada3|ada4|misreport")
        ->capture_default_str();
    inflate->add_option("--irs", inflation_config.ratios, "inflation ratios")
        ->delimiter(',')
        ->capture_default_str();
    inflate->add_option("--anchor", inf_anchor, "anchor source: P|R|A")->capture_default_str();
    inflate->add_option("--mode", inf_mode, "append|interleave")->capture_default_str();
    inflate->add_option("--multiplier", inflation_config.misreport_multiplier,
                        "misreport count multiplier")
        ->capture_default_str();
    inflate->add_option("--run-min", inflation_config.run_min, "min interleave run length")
        ->capture_default_str();
    inflate->add_option("--run-max", inflation_config.run_max, "max interleave run length")
        ->capture_default_str();
    inflate->add_option("--segment-min", inflation_config.segment_min, "min donor segment")
        ->capture_default_str();
    inflate->add_option("--segment-max", inflation_config.segment_max, "max donor segment")
        ->capture_default_str();
    inflate->add_option("--out", inf_out, "inflated corpus JSONL")->required();

    // ---- train-mh ----
    auto* train_mh = app.add_subcommand("train-mh", "train a matching head");
    std::string mh_corpus, mh_vocab, mh_task = "tb", mh_out, mh_loss = "focal";
    MatchingDataConfig mh_data_config;
    TrainConfig mh_train_config;
    size_t mh_hidden = 384;
    train_mh->add_option("--corpus", mh_corpus, "training corpus JSONL")->required();
    train_mh->add_option("--vocab", mh_vocab, "vocabulary JSON");
    train_mh->add_option("--task", mh_task, "tb (token-to-block) or ba (block-to-answer)")
        ->check(CLI::IsMember({"tb", "ba"}))
        ->capture_default_str();
    train_mh->add_option("--pairs", mh_data_config.pairs_per_class, "pairs per class")
        ->capture_default_str();
    train_mh->add_option("--lr", mh_train_config.learning_rate, "learning rate")
        ->capture_default_str();
    train_mh->add_option("--epochs", mh_train_config.epochs, "epochs")->capture_default_str();
    train_mh->add_option("--batch", mh_train_config.batch_size, "batch size")
        ->capture_default_str();
    train_mh->add_option("--loss", mh_loss, "focal|bce")
        ->check(CLI::IsMember({"focal", "bce"}))
        ->capture_default_str();
    train_mh->add_option("--hidden", mh_hidden, "hidden width")->capture_default_str();
    train_mh->add_option("--out", mh_out, "model JSON path")->required();

    // ---- train-verifier ----
    auto* train_ver = app.add_subcommand("train-verifier", "train the DeepSets verifier");
    std::string ver_corpus, ver_vocab, ver_tb, ver_ba, ver_out;
    VerifierDataConfig ver_data_config;
    DeepSetsTrainConfig ver_train_config;
    size_t ver_hidden = 256;
    train_ver->add_option("--corpus", ver_corpus, "training corpus JSONL")->required();
    train_ver->add_option("--vocab", ver_vocab, "vocabulary JSON");
    train_ver->add_option("--mh-tb", ver_tb, "token-to-block head JSON")->required();
    train_ver->add_option("--mh-ba", ver_ba, "block-to-answer head JSON")->required();
    train_ver->add_option("--sets", ver_data_config.sets_per_class, "evidence sets per class")
        ->capture_default_str();
    train_ver->add_option("--beta", ver_data_config.block_size, "block size")
        ->check(CLI::IsMember(beta_presets))
        ->capture_default_str();
    train_ver->add_option("--gamma", ver_data_config.initial_ratio, "initial sampling ratio")
        ->capture_default_str();
    train_ver->add_option("--lr", ver_train_config.learning_rate, "learning rate")
        ->capture_default_str();
    train_ver->add_option("--epochs", ver_train_config.epochs, "epochs")->capture_default_str();
    train_ver->add_option("--hidden", ver_hidden, "hidden width")->capture_default_str();
    train_ver->add_option("--out", ver_out, "model JSON path")->required();

    // ---- commit ----
    auto* commit = app.add_subcommand("commit", "emit Merkle commitments for a corpus");
    std::string commit_corpus, commit_vocab, commit_out, commit_provider_id = "cola";
    uint64_t commit_beta = 256;
    commit->add_option("--corpus", commit_corpus, "corpus JSONL")->required();
    commit->add_option("--vocab", commit_vocab, "vocabulary JSON");
    commit->add_option("--beta", commit_beta, "block size")
        ->check(CLI::IsMember(beta_presets))
        ->capture_default_str();
    commit->add_option("--provider-id", commit_provider_id, "provider identifier")
        ->capture_default_str();
    commit->add_option("--out", commit_out, "commitments JSONL")->required();

    // ---- audit ----
    auto* audit = app.add_subcommand("audit", "run multi-round audits over a corpus");
    std::string audit_corpus, audit_vocab, audit_tb, audit_ba, audit_deepsets, audit_out,
        audit_transcript, audit_verifier = "rule", audit_evidence = "cumulative";
    uint64_t audit_beta = 256;
    double audit_gamma = 0.3, audit_tau = -1.0;
    audit->add_option("--corpus", audit_corpus, "corpus JSONL")->required();
    audit->add_option("--vocab", audit_vocab, "vocabulary JSON");
    audit->add_option("--mh-tb", audit_tb, "token-to-block head JSON")->required();
    audit->add_option("--mh-ba", audit_ba, "block-to-answer head JSON")->required();
    audit->add_option("--deepsets", audit_deepsets, "DeepSets model JSON (learned verifier)");
    audit->add_option("--verifier", audit_verifier, "rule|learned")
        ->check(CLI::IsMember({"rule", "learned"}))
        ->capture_default_str();
    audit->add_option("--tau", audit_tau, "acceptance threshold (default 0.6 rule / 0.5 learned)");
    audit->add_option("--beta", audit_beta, "block size")
        ->check(CLI::IsMember(beta_presets))
        ->capture_default_str();
    audit->add_option("--gamma", audit_gamma, "initial sampling ratio")->capture_default_str();
    audit->add_option("--evidence", audit_evidence, "cumulative|per-round")
        ->check(CLI::IsMember({"cumulative", "per-round"}))
        ->capture_default_str();
    audit->add_option("--out", audit_out, "verdicts JSONL")->required();
    audit->add_option("--transcript", audit_transcript, "transcript JSONL");

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "run a full experiment grid");
    std::string eval_corpus, eval_vocab, eval_tb, eval_ba, eval_deepsets, eval_out, eval_csv,
        eval_verifier = "rule", eval_evidence = "cumulative";
    std::vector<std::string> eval_kind_names = {"naive"};
    ExperimentGrid grid;
    eval->add_option("--corpus", eval_corpus, "evaluation corpus JSONL")->required();
    eval->add_option("--vocab", eval_vocab, "vocabulary JSON");
    eval->add_option("--mh-tb", eval_tb, "token-to-block head JSON")->required();
    eval->add_option("--mh-ba", eval_ba, "block-to-answer head JSON")->required();
    eval->add_option("--deepsets", eval_deepsets, "DeepSets model JSON");
    eval->add_option("--kinds", eval_kind_names, "inflation kinds")
        ->delimiter(',')
        ->capture_default_str();
    eval->add_option("--irs", grid.ratios, "inflation ratios")
        ->delimiter(',')
        ->capture_default_str();
    eval->add_option("--beta", grid.block_size, "block size")
        ->check(CLI::IsMember(beta_presets))
        ->capture_default_str();
    eval->add_option("--verifier", eval_verifier, "rule|learned")
        ->check(CLI::IsMember({"rule", "learned"}))
        ->capture_default_str();
    double eval_tau = -1.0;
    eval->add_option("--tau", eval_tau, "acceptance threshold");
    eval->add_option("--evidence", eval_evidence, "cumulative|per-round")
        ->check(CLI::IsMember({"cumulative", "per-round"}))
        ->capture_default_str();
    eval->add_option("--multiplier", grid.misreport_multiplier, "misreport multiplier")
        ->capture_default_str();
    eval->add_option("--max-records", grid.max_records, "limit records (0 = all)")
        ->capture_default_str();
    eval->add_option("--out", eval_out, "report JSON path")->required();
    eval->add_option("--csv", eval_csv, "report CSV path");

    // ---- bench-merkle ----
    auto* bench = app.add_subcommand("bench-merkle", "time Merkle tree construction");
    std::vector<size_t> bench_counts = {1000, 2000, 4000, 8000};
    std::vector<size_t> bench_dims = {384};
    size_t bench_repeats = 5;
    std::string bench_out;
    bench->add_option("--counts", bench_counts, "token counts")
        ->delimiter(',')
        ->capture_default_str();
    bench->add_option("--dims", bench_dims, "embedding dimensions")
        ->delimiter(',')
        ->capture_default_str();
    bench->add_option("--repeats", bench_repeats, "repeats per point")->capture_default_str();
    bench->add_option("--out", bench_out, "CSV path (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            corpus_config.seed = seed;
            const SyntheticCorpus corpus = generate_corpus(corpus_config);
            RuleTokenizer tokenizer(corpus.vocabulary);
            std::vector<CorpusRecord> rows;
            rows.reserve(corpus.records.size());
            for (const auto& record : corpus.records) {
                rows.push_back(to_corpus_record(record, tokenizer));
            }
            save_corpus_jsonl(gen_out, rows);
            save_vocabulary(gen_vocab_out, *corpus.vocabulary);
            std::cout << "wrote " << rows.size() << " records to " << gen_out << "\n";
        } else if (inflate->parsed()) {
            auto input = load_corpus(inf_corpus, inf_vocab);
            const auto kind = inflation_kind_from_string(inf_kind);
            if (!kind) throw CLI::ValidationError("--kind", "unknown kind " + inf_kind);
            inflation_config.kind = *kind;
            inflation_config.seed = seed;
            inflation_config.anchor_source = inf_anchor == "P" ? AnchorSource::prompt
                                             : inf_anchor == "A" ? AnchorSource::answer
                                                                 : AnchorSource::reasoning;
            inflation_config.insertion_mode = inf_mode == "append" ? InsertionMode::append
                                                                   : InsertionMode::block_interleave;
            SyntheticProvider provider(provider_seed, dimension);
            std::optional<NeighborIndex> neighbors;
            RetrievalIndex retrieval;
            InflationContext context;
            context.vocabulary = input.vocabulary.get();
            context.provider = &provider;
            if (inflation_config.kind == InflationKind::ada1) {
                neighbors.emplace(*input.vocabulary, provider, inflation_config.neighbor_pool);
                context.neighbors = &*neighbors;
            }
            if (inflation_config.kind == InflationKind::ada4) {
                retrieval = build_retrieval_index(input.records, provider);
                context.retrieval = &retrieval;
            }
            const auto inflated = inflate_dataset(input.records, inflation_config, context);
            std::vector<CorpusRecord> rows;
            rows.reserve(inflated.size());
            for (const auto& item : inflated) {
                CorpusRecord row = to_corpus_record(item.record, *input.tokenizer);
                row.kind = to_string(item.kind);
                row.ir = item.achieved_ir;
                row.injected_positions = item.injected_positions;
                rows.push_back(std::move(row));
            }
            save_corpus_jsonl(inf_out, rows);
            std::cout << "wrote " << rows.size() << " inflated records to " << inf_out << "\n";
        } else if (train_mh->parsed()) {
            auto input = load_corpus(mh_corpus, mh_vocab);
            SyntheticProvider provider(provider_seed, dimension);
            mh_data_config.task =
                mh_task == "tb" ? HeadKind::token_to_block : HeadKind::block_to_answer;
            mh_data_config.seed = seed;
            mh_train_config.loss = mh_loss == "bce" ? LossKind::bce : LossKind::focal;
            mh_train_config.seed = seed;
            const auto data =
                build_matching_dataset(input.records, *input.vocabulary, provider, mh_data_config);
            std::vector<double> losses;
            const MatchingHead head = train_matching_head(
                mh_data_config.task, dimension, data, mh_train_config, mh_hidden, &losses);
            head.save(mh_out);
            std::cout << "trained on " << data.size() << " pairs; epoch losses:";
            for (double loss : losses) std::cout << ' ' << loss;
            std::cout << "\nwrote " << mh_out << "\n";
        } else if (train_ver->parsed()) {
            auto input = load_corpus(ver_corpus, ver_vocab);
            SyntheticProvider provider(provider_seed, dimension);
            const MatchingHead head_tb = MatchingHead::load(ver_tb);
            const MatchingHead head_ba = MatchingHead::load(ver_ba);
            ver_data_config.seed = seed;
            ver_train_config.seed = seed;
            const auto sets = build_verifier_dataset(input.records, *input.vocabulary, provider,
                                                     head_tb, head_ba, ver_data_config);
            std::vector<double> losses;
            const DeepSetsModel model = train_deepsets(sets, ver_train_config, ver_hidden, &losses);
            model.save(ver_out);
            std::cout << "trained on " << sets.size() << " evidence sets; epoch losses:";
            for (double loss : losses) std::cout << ' ' << loss;
            std::cout << "\nwrote " << ver_out << "\n";
        } else if (commit->parsed()) {
            auto input = load_corpus(commit_corpus, commit_vocab);
            auto provider = std::make_shared<SyntheticProvider>(provider_seed, dimension);
            std::ofstream out(commit_out);
            if (!out) throw std::runtime_error("cannot write " + commit_out);
            for (const auto& record : input.records) {
                ProviderSession session(record, provider, commit_beta, commit_provider_id);
                out << commit_to_json(session.commitment()).dump() << '\n';
            }
            std::cout << "wrote " << input.records.size() << " commitments to " << commit_out
                      << "\n";
        } else if (audit->parsed()) {
            auto input = load_corpus(audit_corpus, audit_vocab);
            auto provider = std::make_shared<SyntheticProvider>(provider_seed, dimension);
            const MatchingHead head_tb = MatchingHead::load(audit_tb);
            const MatchingHead head_ba = MatchingHead::load(audit_ba);
            std::optional<DeepSetsModel> deepsets;
            if (!audit_deepsets.empty()) deepsets = DeepSetsModel::load(audit_deepsets);
            const VerifierKind kind =
                audit_verifier == "learned" ? VerifierKind::learned : VerifierKind::rule;
            AuditParams params = AuditParams::defaults(kind, audit_beta);
            params.initial_ratio = audit_gamma;
            params.cumulative_evidence = audit_evidence == "cumulative";
            if (audit_tau >= 0.0) params.threshold = audit_tau;
            VerifierRef verifier{kind, params.threshold, deepsets ? &*deepsets : nullptr};

            std::ofstream out(audit_out);
            if (!out) throw std::runtime_error("cannot write " + audit_out);
            std::ofstream transcript_out;
            if (!audit_transcript.empty()) {
                transcript_out.open(audit_transcript);
                if (!transcript_out) throw std::runtime_error("cannot write " + audit_transcript);
            }
            size_t flagged = 0;
            for (size_t i = 0; i < input.records.size(); ++i) {
                const auto& record = input.records[i];
                ProviderSession session(record, provider, audit_beta);
                InProcessChannel channel(session);
                AuditTranscript transcript;
                const Verdict verdict = run_audit(
                    auditor_view_of(record, session.commitment()), channel, head_tb, head_ba,
                    verifier, params, *provider, mix_key(seed, i),
                    transcript_out.is_open() ? &transcript : nullptr);
                out << verdict_to_json(verdict).dump() << '\n';
                if (transcript_out.is_open()) transcript_out << transcript.to_jsonl();
                if (verdict.decision == AuditDecision::flagged_for_inflation) ++flagged;
            }
            std::cout << "audited " << input.records.size() << " records; flagged " << flagged
                      << "\n";
        } else if (eval->parsed()) {
            auto input = load_corpus(eval_corpus, eval_vocab);
            auto provider = std::make_shared<SyntheticProvider>(provider_seed, dimension);
            const MatchingHead head_tb = MatchingHead::load(eval_tb);
            const MatchingHead head_ba = MatchingHead::load(eval_ba);
            std::optional<DeepSetsModel> deepsets;
            if (!eval_deepsets.empty()) deepsets = DeepSetsModel::load(eval_deepsets);
            grid.kinds = parse_kinds(eval_kind_names);
            grid.verifier = eval_verifier == "learned" ? VerifierKind::learned : VerifierKind::rule;
            grid.tau = eval_tau >= 0.0 ? eval_tau
                                       : (grid.verifier == VerifierKind::rule ? 0.6 : 0.5);
            grid.cumulative_evidence = eval_evidence == "cumulative";
            grid.seed = seed;
            ExperimentArtifacts artifacts{&head_tb, &head_ba, deepsets ? &*deepsets : nullptr};
            const ExperimentReport report =
                run_experiment(input.records, *input.vocabulary, provider, artifacts, grid);
            write_text(eval_out, report.to_json_string() + "\n");
            if (!eval_csv.empty()) write_text(eval_csv, report.to_csv());
            std::cout << report.to_csv();
        } else if (bench->parsed()) {
            const auto rows = bench_merkle(bench_counts, bench_dims, bench_repeats, seed);
            const std::string csv = bench_to_csv(rows);
            if (bench_out.empty()) {
                std::cout << csv;
            } else {
                write_text(bench_out, csv);
                std::cout << "wrote " << bench_out << "\n";
            }
        }
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 1;
    }
    return 0;
}
