"""End-to-end smoke tests for the Python bindings."""

import pytest

import coin_audit as ca


@pytest.fixture(scope="module")
def corpus():
    config = ca.SyntheticCorpusConfig()
    config.record_count = 6
    config.vocabulary_size = 600
    config.reasoning_min = 300
    config.reasoning_max = 900
    config.seed = 7
    return ca.generate_corpus(config)


@pytest.fixture(scope="module")
def provider():
    return ca.SyntheticProvider(123, 32)


def test_tokenizer_round_trip():
    vocab = ca.Vocabulary()
    for word in ("solve", "2x", "+", "3", "=", "7", "."):
        vocab.add(word)
    tokenizer = ca.RuleTokenizer(vocab)
    tokens = tokenizer.tokenize("Solve 2x+3=7.")
    assert [t.surface for t in tokens] == ["solve", "2x", "+", "3", "=", "7", "."]
    again = tokenizer.tokenize(tokenizer.detokenize(tokens))
    assert [t.id for t in again] == [t.id for t in tokens]


def test_partition_and_inflation_rate():
    tokens = [ca.Token(1, "a")] * 1000
    blocks = ca.partition_trace(tokens, 256)
    assert [len(b.tokens) for b in blocks] == [256, 256, 256, 232]
    assert ca.inflation_rate(1000, 3000) == pytest.approx(3.0)


def test_embeddings_are_deterministic(provider):
    a = provider.embed_token(ca.Token(5, "x"))
    b = provider.embed_token(ca.Token(5, "x"))
    assert a == b
    assert len(a) == 32
    assert ca.cosine_similarity(a, a) == 1.0


def test_merkle_prove_and_verify(provider):
    fps = []
    for i in range(5):
        block = provider.embed_token(ca.Token(100, "b"))
        token = provider.embed_token(ca.Token(i, "t"))
        fps.append(ca.TokenFingerprint(block, token))
    tree = ca.MerkleTree.build(fps)
    assert tree.leaf_count() == 5
    assert tree.padded_count() == 8
    root = tree.root_hex()
    for i, fp in enumerate(fps):
        path = tree.prove(i)
        assert len(path) == 3
        assert ca.verify_proof(root, fp.serialize(), path)
    # Tampered fingerprints fail.
    raw = bytearray(fps[0].serialize())
    raw[3] ^= 1
    assert not ca.verify_proof(root, bytes(raw), tree.prove(0))


def test_feature_map_and_focal_loss():
    a = [1.0, 2.0]
    b = [3.0, 4.0]
    h = ca.build_features(a, b)
    assert len(h) == 9
    assert h[6] == 3.0 and h[7] == 8.0
    import math

    assert ca.focal_loss(0.5, 1, 2.0, 0.25) == pytest.approx(0.25 * 0.25 * math.log(2.0))


def test_rule_verdict():
    accept = ca.rule_verdict([ca.MatchScorePair(0.9, 0.9)], 0.6)
    reject = ca.rule_verdict([ca.MatchScorePair(0.9, 0.5)], 0.6)
    assert accept and not reject
    assert not ca.rule_verdict([], 0.6)


def test_audit_round_trip(corpus, provider):
    record = corpus.records[0]
    head_tb = ca.MatchingHead(ca.HeadKind.token_to_block, 32, 16)
    head_ba = ca.MatchingHead(ca.HeadKind.block_to_answer, 32, 16)
    # Zero-initialized heads score 0.5 everywhere: tau selects the outcome.
    verdict = ca.audit_record(record, provider, head_tb, head_ba, tau=0.4, seed=9)
    assert verdict.decision == ca.AuditDecision.audit_successful
    assert verdict.rounds >= 1
    assert verdict.merkle_proofs_checked > 0

    verdict = ca.audit_record(record, provider, head_tb, head_ba, tau=0.6, seed=9)
    assert verdict.decision == ca.AuditDecision.flagged_for_inflation
    assert verdict.rounds == verdict.block_count


def test_misreport_is_flagged(corpus, provider):
    lied = ca.misreport(corpus.records[1], 2.0).record
    head_tb = ca.MatchingHead(ca.HeadKind.token_to_block, 32, 16)
    head_ba = ca.MatchingHead(ca.HeadKind.block_to_answer, 32, 16)
    verdict = ca.audit_record(lied, provider, head_tb, head_ba, tau=0.4, seed=11)
    assert verdict.decision == ca.AuditDecision.flagged_for_inflation


def test_training_smoke():
    import random

    rng = random.Random(3)
    data = []
    for i in range(400):
        label = i % 2
        a = [rng.gauss(0.0, 1.0) for _ in range(8)]
        if label == 0:
            b = [x + rng.gauss(0.0, 0.05) for x in a]
        else:
            b = [rng.gauss(0.0, 1.0) for _ in range(8)]
        data.append((ca.build_features(a, b), label))
    head = ca.train_matching_head(
        ca.HeadKind.token_to_block, 8, data, learning_rate=1e-3, epochs=2, hidden=16
    )
    aligned = ca.build_features([1.0] * 8, [1.0] * 8)
    shifted = ca.build_features([1.0] * 8, [-1.0] * 8)
    assert head.forward(aligned) > head.forward(shifted)
