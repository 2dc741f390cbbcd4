#include <doctest.h>

#include <numeric>

#include "coin/core.hpp"
#include "coin/harness.hpp"
#include "coin/rng.hpp"

using namespace coin;

TEST_CASE("partition_trace splits with remainder") {
    TokenSeq reasoning(1000);
    const auto blocks = partition_trace(reasoning, 256);
    REQUIRE(blocks.size() == 4);
    CHECK(blocks[0].tokens.size() == 256);
    CHECK(blocks[1].tokens.size() == 256);
    CHECK(blocks[2].tokens.size() == 256);
    CHECK(blocks[3].tokens.size() == 232);
}

TEST_CASE("partition_trace exact fit and edge cases") {
    TokenSeq exact(256);
    CHECK(partition_trace(exact, 256).size() == 1);
    CHECK(partition_trace({}, 256).empty());
    CHECK_THROWS_AS(partition_trace(exact, 0), std::invalid_argument);
}

TEST_CASE("partition is lossless and block counts bound the length") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t len = 1 + rng.index(2000);
        const uint64_t beta = 1 + rng.index(300);
        TokenSeq reasoning;
        for (size_t i = 0; i < len; ++i) {
            reasoning.push_back(Token{static_cast<uint32_t>(rng.index(100)), "t"});
        }
        const auto blocks = partition_trace(reasoning, beta);
        TokenSeq flat;
        for (const auto& block : blocks) {
            CHECK(block.index == flat.size() / beta);
            flat.insert(flat.end(), block.tokens.begin(), block.tokens.end());
        }
        CHECK(flat == reasoning);
        const uint64_t alpha = blocks.size();
        CHECK(alpha * beta >= len);
        CHECK((alpha - 1) * beta < len);
        for (size_t b = 0; b + 1 < blocks.size(); ++b) {
            CHECK(blocks[b].tokens.size() == beta);
        }
    }
}

TEST_CASE("block counts on a corpus matched to long traces") {
    // Mean reasoning length around 4300 gives a mean block count near 17.
    SyntheticCorpusConfig config;
    config.record_count = 60;
    config.vocabulary_size = 2000;
    config.reasoning_min = 3000;
    config.reasoning_max = 6100;
    config.seed = 11;
    const auto corpus = generate_corpus(config);
    double alpha_sum = 0.0;
    for (const auto& record : corpus.records) {
        alpha_sum += static_cast<double>(partition_trace(record.reasoning, 256).size());
    }
    const double mean_alpha = alpha_sum / static_cast<double>(corpus.records.size());
    CHECK(mean_alpha > 13.0);
    CHECK(mean_alpha < 21.0);
}

TEST_CASE("inflation_rate") {
    CHECK(inflation_rate(1000, 500) == doctest::Approx(0.5));
    CHECK(inflation_rate(1000, 3000) == doctest::Approx(3.0));
    CHECK(inflation_rate(400, 0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(inflation_rate(0, 10), std::invalid_argument);

    // Scale covariance in the numerator.
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const uint64_t c = 1 + rng.index(5000);
        const uint64_t f = rng.index(5000);
        CHECK(inflation_rate(c, 2 * f) == doctest::Approx(2.0 * inflation_rate(c, f)));
    }
}

TEST_CASE("default audit parameters") {
    const auto rule = AuditParams::defaults(VerifierKind::rule);
    CHECK(rule.block_size == 256);
    CHECK(rule.initial_ratio == doctest::Approx(0.3));
    CHECK(rule.per_block_sample == 25);
    CHECK(rule.threshold == doctest::Approx(0.6));
    const auto learned = AuditParams::defaults(VerifierKind::learned, 512);
    CHECK(learned.per_block_sample == 51);
    CHECK(learned.threshold == doctest::Approx(0.5));
    // k rounds down and clamps to at least one.
    CHECK(AuditParams::defaults(VerifierKind::rule, 5).per_block_sample == 1);
}

TEST_CASE("rule tokenizer splits words and punctuation") {
    auto vocab = std::make_shared<Vocabulary>();
    for (const auto& s : {"solve", "2x", "+", "3", "=", "7", "."}) vocab->add(s);
    RuleTokenizer tokenizer(vocab);

    const auto tokens = tokenizer.tokenize("Solve 2x+3=7.");
    std::vector<std::string> surfaces;
    for (const auto& t : tokens) surfaces.push_back(t.surface);
    CHECK(surfaces == std::vector<std::string>{"solve", "2x", "+", "3", "=", "7", "."});
    for (const auto& t : tokens) CHECK(t.id != Vocabulary::kUnknownId);

    CHECK(tokenizer.tokenize("").empty());
    CHECK(tokenizer.tokenize("zzz-unknown")[0].id == Vocabulary::kUnknownId);
}

TEST_CASE("tokenize/detokenize round-trips ids over random corpus lines") {
    Rng rng(41);
    std::vector<std::string> words;
    auto vocab = std::make_shared<Vocabulary>();
    for (int i = 0; i < 300; ++i) {
        std::string w;
        for (int j = 0; j < 3 + static_cast<int>(rng.index(6)); ++j) {
            w.push_back(static_cast<char>('a' + rng.index(26)));
        }
        words.push_back(w);
        vocab->add(w);
    }
    const std::vector<std::string> punct = {".", ",", "+", "=", "(", ")"};
    for (const auto& p : punct) vocab->add(p);
    RuleTokenizer tokenizer(vocab);

    for (int line = 0; line < 1000; ++line) {
        std::string text;
        const size_t len = 1 + rng.index(30);
        for (size_t i = 0; i < len; ++i) {
            if (i > 0) text.push_back(' ');
            if (rng.uniform() < 0.2) {
                text += punct[rng.index(punct.size())];
            } else {
                text += words[rng.index(words.size())];
            }
        }
        const TokenSeq first = tokenizer.tokenize(text);
        const TokenSeq second = tokenizer.tokenize(tokenizer.detokenize(first));
        REQUIRE(first.size() == second.size());
        for (size_t i = 0; i < first.size(); ++i) CHECK(first[i].id == second[i].id);
    }
}

TEST_CASE("vocabulary basics") {
    Vocabulary vocab;
    CHECK(vocab.size() == 1);
    CHECK(vocab.surface(Vocabulary::kUnknownId) == "<unk>");
    const uint32_t id = vocab.add("hello");
    CHECK(vocab.add("hello") == id);
    CHECK(vocab.find("hello") == id);
    CHECK(!vocab.find("missing").has_value());
    CHECK_THROWS_AS(vocab.surface(99), std::out_of_range);
}
