#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "coin/harness.hpp"
#include "coin/inflation.hpp"
#include "coin/rng.hpp"

using namespace coin;

namespace {

struct Fixture {
    Fixture() {
        SyntheticCorpusConfig config;
        config.record_count = 12;
        config.vocabulary_size = 900;
        config.topic_types_min = 60;
        config.topic_types_max = 120;
        config.reasoning_min = 300;
        config.reasoning_max = 1200;
        config.seed = 5;
        corpus = generate_corpus(config);
        provider = std::make_shared<SyntheticProvider>(1234, 64);
    }
    SyntheticCorpus corpus;
    std::shared_ptr<SyntheticProvider> provider;
};

std::multiset<uint32_t> id_multiset(const TokenSeq& tokens) {
    std::multiset<uint32_t> ids;
    for (const auto& t : tokens) ids.insert(t.id);
    return ids;
}

TokenSeq injected_tokens(const InflatedRecord& inflated) {
    TokenSeq out;
    for (uint64_t pos : inflated.injected_positions) {
        out.push_back(inflated.record.reasoning[pos]);
    }
    return out;
}

}  // namespace

TEST_CASE("naive inflation meets the token budget exactly") {
    Fixture fx;
    ServiceRecord record = fx.corpus.records[0];
    record.reasoning.resize(1000);
    record.reported_reasoning_count = 1000;
    InflationConfig config;

    const auto half = inflate_naive(record, 0.5, *fx.corpus.vocabulary, config, 7);
    CHECK(half.injected_token_count == 500);
    CHECK(half.record.reasoning.size() == 1500);
    CHECK(half.record.reported_reasoning_count == 1500);
    CHECK(half.achieved_ir == doctest::Approx(0.5));
    CHECK(half.record.label.inflated);
    CHECK(half.kind == InflationKind::naive);

    const auto triple = inflate_naive(record, 3.0, *fx.corpus.vocabulary, config, 7);
    CHECK(triple.injected_token_count == 3000);

    // Monotone counts across an inflation-ratio grid.
    uint64_t previous = 0;
    for (double ir : {0.1, 0.3, 0.5, 1.0, 2.0, 3.0}) {
        const auto inflated = inflate_naive(record, ir, *fx.corpus.vocabulary, config, 7);
        CHECK(inflated.injected_token_count >= previous);
        previous = inflated.injected_token_count;
    }

    CHECK_THROWS_AS(inflate_naive(record, 0.5, Vocabulary{}, config, 7), std::invalid_argument);
    CHECK_THROWS_AS(inflate_naive(record, 0.0, *fx.corpus.vocabulary, config, 7),
                    std::invalid_argument);
}

TEST_CASE("naive injections are less aligned with their host block than real tokens") {
    Fixture fx;
    double injected_sum = 0.0, benign_sum = 0.0;
    size_t injected_count = 0, benign_count = 0;
    InflationConfig config;
    for (size_t r = 0; r < 6; ++r) {
        const auto inflated =
            inflate_naive(fx.corpus.records[r], 0.5, *fx.corpus.vocabulary, config, 40 + r);
        const auto blocks = partition_trace(inflated.record.reasoning, 256);
        std::set<uint64_t> injected(inflated.injected_positions.begin(),
                                    inflated.injected_positions.end());
        for (const auto& block : blocks) {
            const Embedding block_emb = fx.provider->embed_block(block.tokens);
            for (size_t i = 0; i < block.tokens.size(); i += 7) {
                const uint64_t global = block.index * 256 + i;
                const double cos = cosine_similarity(
                    fx.provider->embed_token(block.tokens[i]), block_emb);
                if (injected.count(global)) {
                    injected_sum += cos;
                    ++injected_count;
                } else {
                    benign_sum += cos;
                    ++benign_count;
                }
            }
        }
    }
    REQUIRE(injected_count > 100);
    REQUIRE(benign_count > 100);
    CHECK(injected_sum / injected_count < benign_sum / benign_count);
}

TEST_CASE("ada1 injects nearest vocabulary neighbors of anchors") {
    Fixture fx;
    const ServiceRecord& record = fx.corpus.records[1];
    NeighborIndex index(*fx.corpus.vocabulary, *fx.provider, 1);
    InflationConfig config;
    const auto inflated = inflate_ada1(record, 0.3, index, config, 9);

    std::set<uint32_t> nearest;
    for (const auto& token : record.reasoning) {
        nearest.insert(index.neighbors(token.id)[0]);
    }
    for (const auto& token : injected_tokens(inflated)) {
        CHECK(nearest.count(token.id) == 1);
    }
}

TEST_CASE("ada1 injections sit closer to the anchors than naive ones") {
    Fixture fx;
    const ServiceRecord& record = fx.corpus.records[2];
    NeighborIndex index(*fx.corpus.vocabulary, *fx.provider, 10);
    InflationConfig config;
    const auto ada = inflate_ada1(record, 0.2, index, config, 11);
    const auto naive = inflate_naive(record, 0.2, *fx.corpus.vocabulary, config, 11);

    std::set<uint32_t> anchor_ids;
    for (const auto& t : record.reasoning) anchor_ids.insert(t.id);
    std::vector<Embedding> anchor_embs;
    for (uint32_t id : anchor_ids) {
        anchor_embs.push_back(fx.provider->embed_token(fx.corpus.vocabulary->token(id)));
    }
    auto mean_max_similarity = [&](const TokenSeq& tokens) {
        double sum = 0.0;
        for (const auto& token : tokens) {
            const Embedding emb = fx.provider->embed_token(token);
            double best = -1.0;
            for (const auto& anchor : anchor_embs) {
                best = std::max(best, cosine_similarity(emb, anchor));
            }
            sum += best;
        }
        return sum / static_cast<double>(tokens.size());
    };
    CHECK(mean_max_similarity(injected_tokens(ada)) >
          mean_max_similarity(injected_tokens(naive)));
}

TEST_CASE("ada2 resamples the anchor sequence") {
    Fixture fx;
    const ServiceRecord& record = fx.corpus.records[3];
    InflationConfig config;
    const auto inflated = inflate_ada2(record, 1.0, config, 13);
    CHECK(inflated.record.reasoning.size() == 2 * record.reasoning.size());

    std::set<uint32_t> support;
    for (const auto& t : record.reasoning) support.insert(t.id);
    for (const auto& token : injected_tokens(inflated)) {
        CHECK(support.count(token.id) == 1);
    }

    ServiceRecord empty_anchor = record;
    empty_anchor.answer.clear();
    InflationConfig answer_config;
    answer_config.anchor_source = AnchorSource::answer;
    CHECK_THROWS_AS(inflate_ada2(empty_anchor, 1.0, answer_config, 13), std::invalid_argument);
}

TEST_CASE("ada3 splices verbatim donor segments within budget slack") {
    Fixture fx;
    const size_t self = 4;
    const ServiceRecord& record = fx.corpus.records[self];
    InflationConfig config;
    config.segment_min = 8;
    config.segment_max = 32;
    const double ir = 0.4;
    const auto inflated =
        inflate_ada3(record, ir, fx.corpus.records, config, 15, self);

    const uint64_t budget =
        static_cast<uint64_t>(ir * static_cast<double>(record.reasoning.size()));
    CHECK(inflated.injected_token_count >= budget);
    CHECK(inflated.injected_token_count <= budget + config.segment_max);

    // Injected ids all exist in some donor reasoning.
    std::set<uint32_t> donor_ids;
    for (size_t i = 0; i < fx.corpus.records.size(); ++i) {
        if (i == self) continue;
        for (const auto& t : fx.corpus.records[i].reasoning) donor_ids.insert(t.id);
    }
    for (const auto& token : injected_tokens(inflated)) {
        CHECK(donor_ids.count(token.id) == 1);
    }

    // Degenerate single-token segments behave like cross-record resampling.
    config.segment_min = config.segment_max = 1;
    const auto tiny = inflate_ada3(record, 0.1, fx.corpus.records, config, 15, self);
    const uint64_t tiny_budget =
        static_cast<uint64_t>(0.1 * static_cast<double>(record.reasoning.size()));
    CHECK(tiny.injected_token_count == tiny_budget);

    CHECK_THROWS_AS(inflate_ada3(record, 0.5, {}, config, 15), std::invalid_argument);
}

TEST_CASE("ada4 retrieves the most anchor-similar passages") {
    Fixture fx;
    const size_t self = 5;
    const ServiceRecord& record = fx.corpus.records[self];
    const RetrievalIndex index = build_retrieval_index(fx.corpus.records, *fx.provider);
    InflationConfig config;
    const double ir = 0.3;
    const auto inflated = inflate_ada4(record, ir, index, *fx.provider, config, 17, self);

    const uint64_t budget =
        static_cast<uint64_t>(ir * static_cast<double>(record.reasoning.size()));
    size_t max_passage = 0;
    for (const auto& entry : index.entries) {
        max_passage = std::max(max_passage, entry.tokens.size());
    }
    CHECK(inflated.injected_token_count >= budget);
    CHECK(inflated.injected_token_count <= budget + max_passage);

    // Selected passages outrank the rest by anchor similarity.
    const Embedding query = fx.provider->embed_block(record.reasoning);
    std::vector<double> sims;
    for (const auto& entry : index.entries) {
        if (entry.source_record == self) continue;
        sims.push_back(cosine_similarity(query, entry.embedding));
    }
    std::sort(sims.rbegin(), sims.rend());
    const std::multiset<uint32_t> injected_ids = id_multiset(injected_tokens(inflated));
    double best_selected = -1.0;
    for (const auto& entry : index.entries) {
        if (entry.source_record == self) continue;
        const auto entry_ids = id_multiset(entry.tokens);
        bool contained = std::includes(injected_ids.begin(), injected_ids.end(),
                                       entry_ids.begin(), entry_ids.end());
        if (contained) {
            best_selected = std::max(best_selected,
                                     cosine_similarity(query, entry.embedding));
        }
    }
    CHECK(best_selected == doctest::Approx(sims.front()).epsilon(1e-9));

    CHECK_THROWS_AS(inflate_ada4(record, ir, RetrievalIndex{}, *fx.provider, config, 17),
                    std::invalid_argument);
}

TEST_CASE("misreport raises only the billing count") {
    Fixture fx;
    ServiceRecord record = fx.corpus.records[6];
    record.reasoning.resize(500);
    record.reported_reasoning_count = 500;
    const auto inflated = misreport(record, 2.0);
    CHECK(inflated.record.reported_reasoning_count == 1000);
    CHECK(inflated.record.reasoning.size() == 500);
    CHECK(inflated.injected_token_count == 0);
    CHECK(inflated.kind == InflationKind::misreport);
    CHECK_THROWS_AS(misreport(record, 1.0), std::invalid_argument);
}

TEST_CASE("insertion modes and original-trace recovery") {
    Fixture fx;
    const ServiceRecord& record = fx.corpus.records[7];
    InflationConfig config;

    config.insertion_mode = InsertionMode::append;
    const auto appended = inflate_naive(record, 0.5, *fx.corpus.vocabulary, config, 19);
    for (uint64_t pos : appended.injected_positions) {
        CHECK(pos >= record.reasoning.size());
    }
    CHECK(original_reasoning(appended) == record.reasoning);

    config.insertion_mode = InsertionMode::block_interleave;
    config.run_min = 8;
    config.run_max = 64;
    const auto interleaved = inflate_naive(record, 1.0, *fx.corpus.vocabulary, config, 19);
    CHECK(original_reasoning(interleaved) == record.reasoning);
    // Interleaving spreads injections away from the tail.
    CHECK(interleaved.injected_positions.front() < record.reasoning.size() / 2);

    // Deterministic under seed.
    const auto replay = inflate_naive(record, 1.0, *fx.corpus.vocabulary, config, 19);
    CHECK(replay.record.reasoning == interleaved.record.reasoning);
    CHECK(replay.injected_positions == interleaved.injected_positions);
}

TEST_CASE("inflate_dataset emits one record per ratio with nested subsamples") {
    Fixture fx;
    std::vector<ServiceRecord> corpus(fx.corpus.records.begin(), fx.corpus.records.begin() + 5);
    ServiceRecord empty;
    corpus.push_back(empty);  // skipped: empty reasoning

    InflationConfig config;
    config.kind = InflationKind::ada2;
    config.ratios = {0.5, 1.0, 3.0};
    config.seed = 23;
    InflationContext context;
    context.vocabulary = fx.corpus.vocabulary.get();

    const auto dataset = inflate_dataset(corpus, config, context);
    CHECK(dataset.size() == 15);  // 5 usable records x 3 ratios

    for (size_t r = 0; r < 5; ++r) {
        const auto small = id_multiset(injected_tokens(dataset[3 * r]));
        const auto large = id_multiset(injected_tokens(dataset[3 * r + 2]));
        CHECK(std::includes(large.begin(), large.end(), small.begin(), small.end()));
        CHECK(original_reasoning(dataset[3 * r]) == corpus[r].reasoning);
    }

    // Deterministic.
    const auto again = inflate_dataset(corpus, config, context);
    REQUIRE(again.size() == dataset.size());
    for (size_t i = 0; i < dataset.size(); ++i) {
        CHECK(again[i].record.reasoning == dataset[i].record.reasoning);
    }

    // Mixed strategy pools.
    config.kind = InflationKind::naive;
    config.strategy_weights = {{InflationKind::naive, 0.5}, {InflationKind::ada2, 0.5}};
    const auto mixed = inflate_dataset(corpus, config, context);
    CHECK(mixed.size() == 15);

    CHECK_THROWS_AS(inflate_dataset({}, config, context), std::invalid_argument);
}
