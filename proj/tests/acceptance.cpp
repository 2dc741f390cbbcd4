// Acceptance suite: runs every criterion end to end and prints one
// pass/fail line per criterion. Returns the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "coin/harness.hpp"
#include "coin/rng.hpp"

using namespace coin;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& name, const std::string& detail) {
    printf("[%s] C%-2d %s — %s\n", pass ? "PASS" : "FAIL", criterion, name.c_str(),
           detail.c_str());
    fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<TokenFingerprint> random_fingerprints(size_t count, size_t dim, uint64_t seed) {
    Rng rng(seed);
    std::vector<TokenFingerprint> fps(count);
    for (auto& fp : fps) {
        fp.block_embedding.resize(dim);
        fp.token_embedding.resize(dim);
        for (auto& v : fp.block_embedding) v = static_cast<float>(rng.gaussian());
        for (auto& v : fp.token_embedding) v = static_cast<float>(rng.gaussian());
    }
    return fps;
}

Hash256 concat_hash(const Hash256& left, const Hash256& right) {
    uint8_t pair[64];
    std::memcpy(pair, left.data(), 32);
    std::memcpy(pair + 32, right.data(), 32);
    return sha256(pair);
}

// ---------------------------------------------------------------------------
// C1: Merkle completeness and soundness
// ---------------------------------------------------------------------------

void criterion_1() {
    const auto start = std::chrono::steady_clock::now();
    bool complete = true;
    for (size_t n = 1; n <= 64 && complete; ++n) {
        const auto fps = random_fingerprints(n, 16, 1000 + n);
        const MerkleTree tree = MerkleTree::build(fps);
        for (size_t i = 0; i < n; ++i) {
            if (!verify_proof(tree.root(), fps[i], tree.prove(i))) complete = false;
        }
    }

    size_t mutation_failures = 0, mutation_trials = 0;
    Rng rng(5150);
    for (const size_t n : {size_t{100}, size_t{1000}}) {
        const auto fps = random_fingerprints(n, 16, 2000 + n);
        const MerkleTree tree = MerkleTree::build(fps);
        for (int trial = 0; trial < 100; ++trial) {
            ++mutation_trials;
            const size_t leaf = rng.index(n);
            auto bytes = fps[leaf].serialize();
            MerklePath path = tree.prove(leaf);
            Hash256 root = tree.root();
            switch (trial % 3) {
                case 0:
                    bytes[rng.index(bytes.size())] ^= static_cast<uint8_t>(1u << rng.index(8));
                    break;
                case 1: {
                    auto& step = path.steps[rng.index(path.steps.size())];
                    step.sibling[rng.index(32)] ^= static_cast<uint8_t>(1u << rng.index(8));
                    break;
                }
                default:
                    root[rng.index(32)] ^= static_cast<uint8_t>(1u << rng.index(8));
            }
            if (!verify_proof(root, bytes, path)) ++mutation_failures;
        }
    }
    const double elapsed = seconds_since(start);
    const bool pass =
        complete && mutation_failures == mutation_trials && elapsed < 10.0;
    std::ostringstream detail;
    detail << "honest proofs all verify over N in [1,64]; " << mutation_failures << "/"
           << mutation_trials << " single-bit mutations rejected; " << elapsed << " s";
    report(1, pass, "merkle completeness/soundness", detail.str());
}

// ---------------------------------------------------------------------------
// C2: padding and path length, hand-built oracle
// ---------------------------------------------------------------------------

void criterion_2() {
    const size_t cases[] = {1, 2, 3, 5, 1000};
    const size_t padded_expect[] = {1, 2, 4, 8, 1024};
    const size_t depth_expect[] = {0, 1, 2, 3, 10};
    bool pass = true;
    for (size_t c = 0; c < 5; ++c) {
        const auto fps = random_fingerprints(cases[c], 16, 3000 + c);
        const MerkleTree tree = MerkleTree::build(fps);
        if (tree.padded_count() != padded_expect[c]) pass = false;
        if (tree.prove(0).steps.size() != depth_expect[c]) pass = false;
    }
    // N = 3 against the hand-folded four-leaf oracle.
    const auto fps = random_fingerprints(3, 16, 3100);
    const Hash256 expected = concat_hash(concat_hash(fps[0].leaf_hash(), fps[1].leaf_hash()),
                                         concat_hash(fps[2].leaf_hash(), fps[2].leaf_hash()));
    if (MerkleTree::build(fps).root() != expected) pass = false;
    report(2, pass, "padding and path length",
           "padded counts and path lengths exact; N=3 root equals hand-built oracle");
}

// ---------------------------------------------------------------------------
// C3: feature map
// ---------------------------------------------------------------------------

void criterion_3() {
    Rng rng(3400);
    Embedding v(384);
    for (auto& x : v) x = static_cast<float>(rng.gaussian());
    const MatchFeature h = build_features(v, v);
    bool pass = h.size() == 1537;
    for (size_t i = 2 * 384; i < 3 * 384; ++i) pass = pass && h[i] == 0.0f;
    pass = pass && h.back() == 1.0f;
    std::ostringstream detail;
    detail << "length " << h.size() << " at d=384; identity difference block zero; cos_sim "
           << h.back();
    report(3, pass, "feature map", detail.str());
}

// ---------------------------------------------------------------------------
// C4: gradient correctness
// ---------------------------------------------------------------------------

void criterion_4() {
    TrainConfig config;
    Rng rng(42);
    double worst = 0.0;
    for (int probe = 0; probe < 100; ++probe) {
        MatchingHead head(HeadKind::token_to_block, 6, 12);
        head.init_weights(rng.next_u64());
        Embedding a(6), b(6);
        for (auto& x : a) x = static_cast<float>(rng.gaussian() * 0.4);
        for (auto& x : b) x = static_cast<float>(rng.gaussian() * 0.4);
        const MatchFeature h = build_features(a, b);
        const int label = static_cast<int>(rng.index(2));
        HeadGradients grads;
        head.loss_and_gradients(h, label, config, grads);
        double analytic = 0.0;
        double* param = nullptr;
        switch (rng.index(4)) {
            case 0: {
                const size_t i = rng.index(head.w1().size());
                analytic = grads.w1[i];
                param = &head.w1()[i];
                break;
            }
            case 1: {
                const size_t i = rng.index(head.b1().size());
                analytic = grads.b1[i];
                param = &head.b1()[i];
                break;
            }
            case 2: {
                const size_t i = rng.index(head.w2().size());
                analytic = grads.w2[i];
                param = &head.w2()[i];
                break;
            }
            default:
                analytic = grads.b2;
                param = &head.b2();
        }
        const double step = 1e-6 * std::max(1.0, std::abs(*param));
        HeadGradients scratch;
        const double saved = *param;
        *param = saved + step;
        const double up = head.loss_and_gradients(h, label, config, scratch);
        *param = saved - step;
        const double down = head.loss_and_gradients(h, label, config, scratch);
        *param = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double rel =
            std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-3);
        worst = std::max(worst, rel);
    }
    std::ostringstream detail;
    detail << "100 probes, worst relative error " << worst;
    report(4, worst <= 1e-4, "focal-loss gradient check", detail.str());
}

// ---------------------------------------------------------------------------
// C5: training sanity on a separable set
// ---------------------------------------------------------------------------

std::vector<LabeledFeature> separable_pairs(size_t count, size_t dim, uint64_t seed) {
    Rng rng(seed);
    std::vector<LabeledFeature> data;
    data.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        Embedding a(dim), b(dim);
        double norm = 0.0;
        for (auto& v : a) {
            v = static_cast<float>(rng.gaussian());
            norm += static_cast<double>(v) * v;
        }
        const float inv = static_cast<float>(1.0 / std::sqrt(norm));
        for (auto& v : a) v *= inv;
        const int label = static_cast<int>(i % 2);
        if (label == 0) {
            for (size_t d = 0; d < dim; ++d) {
                b[d] = a[d] + static_cast<float>(rng.gaussian() * 0.05f);
            }
        } else {
            for (auto& v : b) v = static_cast<float>(rng.gaussian());
        }
        data.push_back(LabeledFeature{build_features(a, b), label});
    }
    return data;
}

void criterion_5() {
    const auto start = std::chrono::steady_clock::now();
    const auto data = separable_pairs(10000, 384, 5123);
    const std::vector<LabeledFeature> train(data.begin(), data.begin() + 8000);
    const std::vector<LabeledFeature> held(data.begin() + 8000, data.end());
    TrainConfig config;
    config.learning_rate = 1e-3;  // desk-scale rate for from-scratch training
    config.epochs = 3;
    config.batch_size = 128;
    config.seed = 42;
    const MatchingHead head =
        train_matching_head(HeadKind::token_to_block, 384, train, config, 384);
    size_t correct = 0;
    for (const auto& item : held) {
        if ((head.inflated_probability(item.feature) > 0.5) == (item.label == 1)) ++correct;
    }
    const double accuracy = static_cast<double>(correct) / static_cast<double>(held.size());
    const MatchingHead again =
        train_matching_head(HeadKind::token_to_block, 384, train, config, 384);
    const bool identical = again.w1() == head.w1() && again.b1() == head.b1() &&
                           again.w2() == head.w2() && again.b2() == head.b2();
    const double elapsed = seconds_since(start);
    const bool pass = accuracy >= 0.95 && identical && elapsed < 60.0;
    std::ostringstream detail;
    detail << "held-out accuracy " << accuracy << " after 3 epochs; seed-42 reruns "
           << (identical ? "bit-identical" : "DIVERGED") << "; " << elapsed << " s";
    report(5, pass, "training sanity", detail.str());
}

// ---------------------------------------------------------------------------
// C6: DeepSets permutation invariance
// ---------------------------------------------------------------------------

void criterion_6() {
    DeepSetsModel model(256);
    model.init_weights(606);
    Rng rng(607);
    std::vector<MatchScorePair> scores;
    for (uint64_t i = 0; i < 10; ++i) {
        scores.push_back(MatchScorePair{rng.uniform(), rng.uniform(), i});
    }
    const double reference = model.forward(scores);
    bool pass = true;
    for (int shuffle = 0; shuffle < 50; ++shuffle) {
        rng.shuffle(scores);
        if (model.forward(scores) != reference) pass = false;
    }
    std::ostringstream detail;
    detail << "confidence " << reference << " identical across 50 permutations of a 10-pair set";
    report(6, pass, "deepsets permutation invariance", detail.str());
}

// ---------------------------------------------------------------------------
// Shared trained artifacts for the protocol criteria
// ---------------------------------------------------------------------------

struct Artifacts {
    std::shared_ptr<SyntheticProvider> provider;
    SyntheticCorpus train_corpus;
    SyntheticCorpus eval_corpus;
    std::unique_ptr<MatchingHead> head_tb;
    std::unique_ptr<MatchingHead> head_ba;
    std::unique_ptr<DeepSetsModel> deepsets;
    double train_seconds = 0.0;
};

Artifacts build_artifacts() {
    const auto start = std::chrono::steady_clock::now();
    Artifacts art;
    art.provider = std::make_shared<SyntheticProvider>(1000003, 384);

    SyntheticCorpusConfig train_config;
    train_config.record_count = 400;
    train_config.vocabulary_size = 8000;
    train_config.seed = 20250601;
    art.train_corpus = generate_corpus(train_config);

    SyntheticCorpusConfig eval_config = train_config;
    eval_config.record_count = 1000;
    eval_config.seed = 20250602;
    art.eval_corpus = generate_corpus(eval_config);

    // Matching heads train on the first 300 records; the verifier set uses
    // the remaining 100, so the two stages never share records.
    const std::vector<ServiceRecord> head_slice(art.train_corpus.records.begin(),
                                                art.train_corpus.records.begin() + 300);
    const std::vector<ServiceRecord> verifier_slice(art.train_corpus.records.begin() + 300,
                                                    art.train_corpus.records.end());

    TrainConfig train;
    train.learning_rate = 1e-3;  // from-scratch desk-scale rate
    train.epochs = 3;
    train.batch_size = 128;
    train.loss = LossKind::focal;
    train.seed = 42;

    MatchingDataConfig tb_config;
    tb_config.task = HeadKind::token_to_block;
    tb_config.pairs_per_class = 12000;
    tb_config.seed = 101;
    const auto tb_data = build_matching_dataset(head_slice, *art.train_corpus.vocabulary,
                                                *art.provider, tb_config);
    art.head_tb = std::make_unique<MatchingHead>(
        train_matching_head(HeadKind::token_to_block, 384, tb_data, train, 384));

    MatchingDataConfig ba_config = tb_config;
    ba_config.task = HeadKind::block_to_answer;
    ba_config.seed = 102;
    const auto ba_data = build_matching_dataset(head_slice, *art.train_corpus.vocabulary,
                                                *art.provider, ba_config);
    art.head_ba = std::make_unique<MatchingHead>(
        train_matching_head(HeadKind::block_to_answer, 384, ba_data, train, 384));

    VerifierDataConfig ver_config;
    ver_config.sets_per_class = 1500;
    ver_config.seed = 103;
    const auto sets = build_verifier_dataset(verifier_slice, *art.train_corpus.vocabulary,
                                             *art.provider, *art.head_tb, *art.head_ba,
                                             ver_config);
    DeepSetsTrainConfig ver_train;
    art.deepsets = std::make_unique<DeepSetsModel>(train_deepsets(sets, ver_train, 256));

    // Audits run against reloaded artifacts, the same way the CLI does.
    const auto dir = std::filesystem::temp_directory_path() / "coin_acceptance";
    std::filesystem::create_directories(dir);
    art.head_tb->save((dir / "head_tb.json").string());
    art.head_ba->save((dir / "head_ba.json").string());
    art.deepsets->save((dir / "deepsets.json").string());
    art.head_tb = std::make_unique<MatchingHead>(MatchingHead::load((dir / "head_tb.json").string()));
    art.head_ba = std::make_unique<MatchingHead>(MatchingHead::load((dir / "head_ba.json").string()));
    art.deepsets =
        std::make_unique<DeepSetsModel>(DeepSetsModel::load((dir / "deepsets.json").string()));

    art.train_seconds = seconds_since(start);
    printf("  trained artifacts in %.1f s (tb pairs %zu, ba pairs %zu, verifier sets %zu)\n",
           art.train_seconds, tb_data.size(), ba_data.size(), sets.size());
    fflush(stdout);
    return art;
}

Verdict audit_one(const Artifacts& art, const ServiceRecord& record, VerifierKind kind,
                  double tau, uint64_t beta, uint64_t seed) {
    ProviderSession session(record, art.provider, beta);
    InProcessChannel channel(session);
    AuditParams params = AuditParams::defaults(kind, beta);
    params.threshold = tau;
    VerifierRef verifier{kind, tau, kind == VerifierKind::learned ? art.deepsets.get() : nullptr};
    return run_audit(auditor_view_of(record, session.commitment()), channel, *art.head_tb,
                     *art.head_ba, verifier, params, *art.provider, seed);
}

// ---------------------------------------------------------------------------
// C7: protocol cost accounting
// ---------------------------------------------------------------------------

void criterion_7(const Artifacts& art) {
    // Block-aligned reasoning lengths keep every audited block full, so the
    // k*l identity is exact.
    SyntheticCorpusConfig config;
    config.record_count = 100;
    config.vocabulary_size = 4000;
    config.reasoning_min = 512;
    config.reasoning_max = 4096;
    config.align_length_to = 256;
    config.seed = 708;
    const auto corpus = generate_corpus(config);

    size_t audits = 0;
    bool pass = true;
    std::ostringstream why;
    auto check_verdict = [&](const Verdict& v) {
        ++audits;
        const uint64_t first = static_cast<uint64_t>(
            std::ceil(0.3 * static_cast<double>(v.block_count)));
        if (v.rounds < first || v.rounds > v.block_count) {
            pass = false;
            why << " l=" << v.rounds << " outside [" << first << "," << v.block_count << "];";
        }
        if (v.merkle_proofs_checked != 25 * v.rounds) {
            pass = false;
            why << " proofs " << v.merkle_proofs_checked << " != 25*" << v.rounds << ";";
        }
        if (v.semantic_judgments != 2 * v.rounds) {
            pass = false;
            why << " judgments " << v.semantic_judgments << " != 2*" << v.rounds << ";";
        }
    };

    Rng seeds(709);
    for (size_t i = 0; i < corpus.records.size(); ++i) {
        const auto& record = corpus.records[i];
        // Trained-pipeline audits: benign and an IR=1.0 naive variant (token
        // counts stay block-aligned for integer ratios).
        check_verdict(audit_one(art, record, VerifierKind::rule, 0.6, 256, seeds.next_u64()));
        InflationConfig inf_config;
        const auto inflated =
            inflate_naive(record, 1.0, *art.eval_corpus.vocabulary, inf_config, seeds.next_u64());
        check_verdict(
            audit_one(art, inflated.record, VerifierKind::rule, 0.6, 256, seeds.next_u64()));
    }
    std::ostringstream detail;
    detail << audits << " audits; l in [ceil(gamma*alpha), alpha], proofs = k*l, judgments = 2*l"
           << why.str();
    report(7, pass && audits == 200, "protocol cost accounting", detail.str());
}

// ---------------------------------------------------------------------------
// C8: misreport detection
// ---------------------------------------------------------------------------

void criterion_8(const Artifacts& art) {
    size_t flagged = 0;
    Rng seeds(808);
    const size_t total = 200;
    for (size_t i = 0; i < total; ++i) {
        const auto& record = art.eval_corpus.records[i];
        const auto lied = misreport(record, 2.0);
        const Verdict v =
            audit_one(art, lied.record, VerifierKind::rule, 0.6, 256, seeds.next_u64());
        if (v.decision == AuditDecision::flagged_for_inflation) ++flagged;
    }
    const double rate = static_cast<double>(flagged) / static_cast<double>(total);
    std::ostringstream detail;
    detail << "m = 2|R| providers flagged in " << flagged << "/" << total << " audits ("
           << rate * 100.0 << "%)";
    report(8, rate >= 0.99, "misreport detection", detail.str());
}

// ---------------------------------------------------------------------------
// C9: naive-inflation curve
// ---------------------------------------------------------------------------

std::vector<double> naive_curve(const Artifacts& art, VerifierKind kind, double tau,
                                const std::vector<double>& ratios, uint64_t seed_base) {
    std::vector<double> dsr;
    for (size_t r = 0; r < ratios.size(); ++r) {
        size_t flagged = 0, total = 0;
        for (size_t i = 0; i < art.eval_corpus.records.size(); ++i) {
            const auto& record = art.eval_corpus.records[i];
            InflationConfig config;
            const uint64_t seed = mix_key(seed_base, mix_key(r, i));
            const auto inflated =
                inflate_naive(record, ratios[r], *art.eval_corpus.vocabulary, config, seed);
            const Verdict v =
                audit_one(art, inflated.record, kind, tau, 256, mix_key(seed, 0x99));
            if (v.decision == AuditDecision::flagged_for_inflation) ++flagged;
            ++total;
        }
        dsr.push_back(static_cast<double>(flagged) / static_cast<double>(total));
    }
    return dsr;
}

void criterion_9(const Artifacts& art) {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<double> ratios = {0.1, 0.3, 0.5, 1.0, 2.0, 3.0};
    const auto dsr = naive_curve(art, VerifierKind::rule, 0.6, ratios, 909);
    bool high_ir_ok = true;
    for (size_t r = 0; r < ratios.size(); ++r) {
        if (ratios[r] >= 1.0 && dsr[r] < 0.95) high_ir_ok = false;
    }
    bool monotone = true;
    for (size_t r = 1; r < dsr.size(); ++r) {
        if (dsr[r] < dsr[r - 1] - 0.02) monotone = false;
    }
    const double elapsed = seconds_since(start);
    std::ostringstream detail;
    detail << "rule verifier, 1000 records; DSR:";
    for (size_t r = 0; r < ratios.size(); ++r) {
        detail << " " << ratios[r] << "->" << dsr[r];
    }
    detail << "; monotone within 2pp " << (monotone ? "yes" : "NO") << "; " << elapsed << " s";
    report(9, high_ir_ok && monotone && elapsed < 600.0, "naive-inflation curve", detail.str());
}

// ---------------------------------------------------------------------------
// C10: verifier ordering and tau trade-off
// ---------------------------------------------------------------------------

void criterion_10(const Artifacts& art) {
    // Ordering at IR = 3.0 over the semantically detectable kinds; each
    // session is built once and audited by both verifiers.
    const std::vector<InflationKind> kinds = {InflationKind::naive, InflationKind::ada1,
                                              InflationKind::ada3, InflationKind::ada4};
    const size_t per_kind = 100;
    NeighborIndex neighbors(*art.eval_corpus.vocabulary, *art.provider, 10);
    const RetrievalIndex retrieval = build_retrieval_index(art.eval_corpus.records, *art.provider);

    size_t rule_flagged = 0, learned_flagged = 0, total = 0;
    Rng seeds(1010);
    for (const auto kind : kinds) {
        for (size_t i = 0; i < per_kind; ++i) {
            const auto& record = art.eval_corpus.records[i];
            InflationConfig config;
            config.kind = kind;
            const uint64_t seed = seeds.next_u64();
            InflatedRecord inflated;
            switch (kind) {
                case InflationKind::naive:
                    inflated =
                        inflate_naive(record, 3.0, *art.eval_corpus.vocabulary, config, seed);
                    break;
                case InflationKind::ada1:
                    inflated = inflate_ada1(record, 3.0, neighbors, config, seed);
                    break;
                case InflationKind::ada3:
                    inflated =
                        inflate_ada3(record, 3.0, art.eval_corpus.records, config, seed, i);
                    break;
                default:
                    inflated = inflate_ada4(record, 3.0, retrieval, *art.provider, config, seed, i);
                    break;
            }
            ProviderSession session(inflated.record, art.provider, 256);
            const AuditorView view = auditor_view_of(inflated.record, session.commitment());
            AuditParams rule_params = AuditParams::defaults(VerifierKind::rule, 256);
            AuditParams learned_params = AuditParams::defaults(VerifierKind::learned, 256);
            InProcessChannel channel(session);
            const Verdict rule_v =
                run_audit(view, channel, *art.head_tb, *art.head_ba,
                          VerifierRef{VerifierKind::rule, 0.6, nullptr}, rule_params,
                          *art.provider, mix_key(seed, 1));
            const Verdict learned_v =
                run_audit(view, channel, *art.head_tb, *art.head_ba,
                          VerifierRef{VerifierKind::learned, 0.5, art.deepsets.get()},
                          learned_params, *art.provider, mix_key(seed, 1));
            rule_flagged += rule_v.decision == AuditDecision::flagged_for_inflation;
            learned_flagged += learned_v.decision == AuditDecision::flagged_for_inflation;
            ++total;
        }
    }
    const double rule_dsr = static_cast<double>(rule_flagged) / static_cast<double>(total);
    const double learned_dsr = static_cast<double>(learned_flagged) / static_cast<double>(total);

    // Tau sweep on the rule verifier via shared audit traces: the audit
    // visit order is threshold-independent, so the sweep is exactly coupled.
    const size_t sweep_records = 300;
    const std::vector<double> taus = {0.4, 0.5, 0.6, 0.7};
    std::vector<AuditTrace> benign_traces, inflated_traces;
    const AuditParams trace_params = AuditParams::defaults(VerifierKind::rule, 256);
    for (size_t i = 0; i < sweep_records; ++i) {
        const auto& record = art.eval_corpus.records[i];
        benign_traces.push_back(trace_audit_scores(record, art.provider, *art.head_tb,
                                                   *art.head_ba, trace_params,
                                                   mix_key(1011, i)));
        InflationConfig config;
        const auto inflated = inflate_naive(record, 0.3, *art.eval_corpus.vocabulary, config,
                                            mix_key(1012, i));
        inflated_traces.push_back(trace_audit_scores(inflated.record, art.provider, *art.head_tb,
                                                     *art.head_ba, trace_params,
                                                     mix_key(1013, i)));
    }
    std::vector<double> benign_dsr, malicious_dsr;
    for (const double tau : taus) {
        size_t benign_ok = 0, flagged = 0;
        const VerifierRef ref{VerifierKind::rule, tau, nullptr};
        for (const auto& trace : benign_traces) {
            benign_ok += replay_decisions(trace, ref, true).decision ==
                         AuditDecision::audit_successful;
        }
        for (const auto& trace : inflated_traces) {
            flagged += replay_decisions(trace, ref, true).decision ==
                       AuditDecision::flagged_for_inflation;
        }
        benign_dsr.push_back(static_cast<double>(benign_ok) / sweep_records);
        malicious_dsr.push_back(static_cast<double>(flagged) / sweep_records);
    }
    bool sweep_ok = true;
    for (size_t t = 1; t < taus.size(); ++t) {
        if (malicious_dsr[t] < malicious_dsr[t - 1] - 0.02) sweep_ok = false;
        if (benign_dsr[t] > benign_dsr[t - 1] + 0.02) sweep_ok = false;
    }

    std::ostringstream detail;
    detail << "IR=3.0 mixed kinds: learned " << learned_dsr << " vs rule " << rule_dsr
           << "; tau sweep malicious:";
    for (double d : malicious_dsr) detail << ' ' << d;
    detail << " benign:";
    for (double d : benign_dsr) detail << ' ' << d;
    report(10, learned_dsr >= rule_dsr && sweep_ok, "verifier ordering and tau trade-off",
           detail.str());
}

// ---------------------------------------------------------------------------
// C11: AER trend across block sizes
// ---------------------------------------------------------------------------

void criterion_11(const Artifacts& art) {
    std::vector<double> aer;
    for (const uint64_t beta : {uint64_t{256}, uint64_t{512}, uint64_t{1024}}) {
        std::vector<Verdict> verdicts;
        Rng seeds(1100 + beta);
        for (const auto& record : art.eval_corpus.records) {
            verdicts.push_back(
                audit_one(art, record, VerifierKind::rule, 0.6, beta, seeds.next_u64()));
        }
        aer.push_back(compute_aer(verdicts));
    }
    const bool pass = aer[0] < aer[1] && aer[1] < aer[2];
    std::ostringstream detail;
    detail << "AER beta=256: " << aer[0] << ", beta=512: " << aer[1] << ", beta=1024: " << aer[2];
    report(11, pass, "AER trend across block sizes", detail.str());
}

// ---------------------------------------------------------------------------
// C12: Merkle timing linearity
// ---------------------------------------------------------------------------

void criterion_12() {
    const auto rows = bench_merkle({1000, 2000, 4000, 8000}, {384}, 5, 1212);
    std::vector<double> x, y;
    for (const auto& row : rows) {
        x.push_back(static_cast<double>(row.token_count));
        y.push_back(row.median_ms);
    }
    const double r2 = linear_fit_r2(x, y);

    // Dimension direction check at fixed N.
    const auto dims = bench_merkle({4000}, {192, 384}, 5, 1213);
    const bool dim_up = dims[1].median_ms > dims[0].median_ms;

    std::ostringstream detail;
    detail << "median ms:";
    for (const auto& row : rows) detail << ' ' << row.token_count << "->" << row.median_ms;
    detail << "; R^2 " << r2 << "; time(d=384) > time(d=192): " << (dim_up ? "yes" : "NO");
    report(12, r2 >= 0.95 && dim_up, "merkle timing linearity", detail.str());
}

}  // namespace

int main() {
    printf("acceptance suite\n");
    const auto start = std::chrono::steady_clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    Artifacts art = build_artifacts();
    criterion_7(art);
    criterion_8(art);
    criterion_9(art);
    criterion_10(art);
    criterion_11(art);
    criterion_12();
    printf("%d criteria failed; total %.1f s\n", failures, seconds_since(start));
    return failures;
}
