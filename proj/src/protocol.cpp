#include "coin/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "coin/rng.hpp"

namespace coin {

using nlohmann::json;

// ---------------------------------------------------------------------------
// base64 for fingerprint bytes
// ---------------------------------------------------------------------------

namespace {

constexpr char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<uint8_t>& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 2 < bytes.size()) {
        const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(kB64Alphabet[(v >> 6) & 63]);
        out.push_back(kB64Alphabet[v & 63]);
        i += 3;
    }
    if (i + 1 == bytes.size()) {
        const uint32_t v = bytes[i] << 16;
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.append("==");
    } else if (i + 2 == bytes.size()) {
        const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(kB64Alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::optional<std::vector<uint8_t>> base64_decode(const std::string& text) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (text.size() % 4 != 0) return std::nullopt;
    std::vector<uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (size_t i = 0; i < text.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (size_t j = 0; j < 4; ++j) {
            const char c = text[i + j];
            if (c == '=') {
                // Padding is only valid at the tail of the final group.
                if (i + 4 != text.size() || j < 2) return std::nullopt;
                vals[j] = 0;
                ++pad;
            } else {
                vals[j] = value_of(c);
                if (vals[j] < 0 || pad > 0) return std::nullopt;
            }
        }
        const uint32_t v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
        out.push_back(static_cast<uint8_t>(v >> 16));
        if (pad < 2) out.push_back(static_cast<uint8_t>(v >> 8));
        if (pad < 1) out.push_back(static_cast<uint8_t>(v));
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Message codecs
// ---------------------------------------------------------------------------

json commit_to_json(const MerkleCommitment& commitment) {
    return json{{"type", "commit"},
                {"root", to_hex(commitment.root)},
                {"m", commitment.claimed_count},
                {"provider_id", commitment.provider_id}};
}

std::optional<MerkleCommitment> commit_from_json(const json& msg) {
    if (!msg.is_object() || !msg.contains("root") || !msg.contains("m")) return std::nullopt;
    const auto root = hash_from_hex(msg["root"].get<std::string>());
    if (!root) return std::nullopt;
    MerkleCommitment commitment;
    commitment.root = *root;
    commitment.claimed_count = msg["m"].get<uint64_t>();
    commitment.provider_id = msg.value("provider_id", std::string{});
    return commitment;
}

json challenge_to_json(const Challenge& challenge) {
    return json{{"type", "challenge"},
                {"audit_id", challenge.audit_id},
                {"block_index", challenge.block_index},
                {"token_indices", challenge.token_indices}};
}

std::optional<Challenge> challenge_from_json(const json& msg) {
    if (!msg.is_object() || !msg.contains("block_index") || !msg.contains("token_indices")) {
        return std::nullopt;
    }
    Challenge challenge;
    challenge.audit_id = msg.value("audit_id", std::string{});
    challenge.block_index = msg["block_index"].get<uint64_t>();
    challenge.token_indices = msg["token_indices"].get<std::vector<uint64_t>>();
    return challenge;
}

json response_to_json(const ChallengeResponse& response) {
    json msg{{"type", "response"}, {"audit_id", response.audit_id}};
    if (response.refused) {
        msg["refused"] = true;
        msg["reason"] = response.refusal_reason;
        return msg;
    }
    msg["block_embedding"] = response.block_embedding;
    json fps = json::array();
    for (const auto& fp : response.fingerprints) fps.push_back(base64_encode(fp));
    msg["fingerprints"] = std::move(fps);
    json paths = json::array();
    for (const auto& path : response.paths) {
        json steps = json::array();
        for (const auto& step : path.steps) {
            steps.push_back(json{{"hash", to_hex(step.sibling)},
                                 {"pos", step.side == Side::left ? "left" : "right"}});
        }
        paths.push_back(std::move(steps));
    }
    msg["paths"] = std::move(paths);
    return msg;
}

std::optional<ChallengeResponse> response_from_json(const json& msg) {
    if (!msg.is_object()) return std::nullopt;
    ChallengeResponse response;
    response.audit_id = msg.value("audit_id", std::string{});
    if (msg.value("refused", false)) {
        response.refused = true;
        response.refusal_reason = msg.value("reason", std::string{});
        return response;
    }
    if (!msg.contains("block_embedding") || !msg.contains("fingerprints") ||
        !msg.contains("paths")) {
        return std::nullopt;
    }
    response.block_embedding = msg["block_embedding"].get<Embedding>();
    for (const auto& encoded : msg["fingerprints"]) {
        auto bytes = base64_decode(encoded.get<std::string>());
        if (!bytes) return std::nullopt;
        response.fingerprints.push_back(std::move(*bytes));
    }
    for (const auto& steps : msg["paths"]) {
        MerklePath path;
        for (const auto& step : steps) {
            if (!step.contains("hash") || !step.contains("pos")) return std::nullopt;
            const auto hash = hash_from_hex(step["hash"].get<std::string>());
            if (!hash) return std::nullopt;
            const std::string pos = step["pos"].get<std::string>();
            if (pos != "left" && pos != "right") return std::nullopt;  // malformed tag
            path.steps.push_back(PathStep{*hash, pos == "left" ? Side::left : Side::right});
        }
        response.paths.push_back(std::move(path));
    }
    if (response.fingerprints.size() != response.paths.size()) return std::nullopt;
    return response;
}

json verdict_to_json(const Verdict& verdict) {
    json msg{{"type", "verdict"},
             {"audit_id", verdict.audit_id},
             {"decision", to_string(verdict.decision)},
             {"l", verdict.rounds},
             {"cost", json{{"merkle_proofs", verdict.merkle_proofs_checked},
                           {"semantic_judgments", verdict.semantic_judgments}}},
             {"alpha", verdict.block_count},
             {"exposed_block_fraction", verdict.exposed_block_fraction}};
    if (verdict.failure_reason) msg["reason"] = to_string(*verdict.failure_reason);
    return msg;
}

const char* to_string(AuditDecision decision) {
    return decision == AuditDecision::audit_successful ? "AuditSuccessful"
                                                       : "FlaggedForInflation";
}

const char* to_string(FailureReason reason) {
    switch (reason) {
        case FailureReason::merkle_mismatch: return "merkle_mismatch";
        case FailureReason::semantic_reject_exhausted: return "semantic_reject_exhausted";
        case FailureReason::refusal: return "refusal";
    }
    return "unknown";
}

std::string AuditTranscript::to_jsonl() const {
    std::ostringstream out;
    for (const auto& msg : messages) out << msg.dump() << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// ProviderSession
// ---------------------------------------------------------------------------

ProviderSession::ProviderSession(ServiceRecord record,
                                 std::shared_ptr<const EmbeddingProvider> provider,
                                 uint64_t block_size, std::string provider_id)
    : record_(std::move(record)), provider_(std::move(provider)), block_size_(block_size) {
    if (!provider_) throw std::invalid_argument("ProviderSession: provider is required");
    const auto blocks = partition_trace(record_.reasoning, block_size_);
    block_embeddings_.reserve(blocks.size());
    token_embeddings_.reserve(record_.reasoning.size());
    std::vector<Hash256> leaves;
    leaves.reserve(record_.reasoning.size());
    std::vector<uint8_t> buffer;
    for (const auto& block : blocks) {
        block_embeddings_.push_back(provider_->embed_block(block.tokens));
        const Embedding& block_emb = block_embeddings_.back();
        for (const auto& token : block.tokens) {
            token_embeddings_.push_back(provider_->embed_token(token));
            serialize_fingerprint_into(block_emb, token_embeddings_.back(), buffer);
            leaves.push_back(sha256(buffer));
        }
    }
    tree_ = MerkleTree::build_from_leaves(std::move(leaves));
    commitment_.root = tree_.root();
    commitment_.claimed_count = record_.reported_reasoning_count;
    commitment_.provider_id = std::move(provider_id);
}

const Embedding& ProviderSession::block_embedding(size_t block_index) const {
    return block_embeddings_.at(block_index);
}

ChallengeResponse ProviderSession::respond(const Challenge& challenge) const {
    ChallengeResponse response;
    response.audit_id = challenge.audit_id;
    const size_t actual = record_.reasoning.size();
    const size_t block_count = block_embeddings_.size();
    if (challenge.block_index >= block_count) {
        response.refused = true;
        response.refusal_reason = "no such block";
        return response;
    }
    for (const uint64_t index : challenge.token_indices) {
        if (index >= actual) {
            response.refused = true;
            response.refusal_reason = "token index beyond supply";
            return response;
        }
    }
    response.block_embedding = block_embeddings_[challenge.block_index];
    std::vector<uint8_t> buffer;
    for (const uint64_t index : challenge.token_indices) {
        const size_t block_of_token = static_cast<size_t>(index / block_size_);
        serialize_fingerprint_into(block_embeddings_[block_of_token], token_embeddings_[index],
                                   buffer);
        response.fingerprints.push_back(buffer);
        response.paths.push_back(tree_.prove(index));
    }
    return response;
}

ChallengeResponse JsonWireChannel::challenge(const Challenge& challenge) {
    const json challenge_wire = challenge_to_json(challenge);
    const auto parsed_challenge = challenge_from_json(json::parse(challenge_wire.dump()));
    if (!parsed_challenge) throw std::runtime_error("JsonWireChannel: challenge did not survive the wire");
    const ChallengeResponse response = session_->respond(*parsed_challenge);
    const json response_wire = response_to_json(response);
    auto parsed_response = response_from_json(json::parse(response_wire.dump()));
    if (!parsed_response) throw std::runtime_error("JsonWireChannel: response did not survive the wire");
    return std::move(*parsed_response);
}

// ---------------------------------------------------------------------------
// Auditor
// ---------------------------------------------------------------------------

AuditorView auditor_view_of(const ServiceRecord& record, const MerkleCommitment& commitment) {
    AuditorView view;
    view.prompt = record.prompt;
    view.answer = record.answer;
    view.reported_reasoning_count = record.reported_reasoning_count;
    view.reported_answer_count = record.reported_answer_count;
    view.commitment = commitment;
    return view;
}

std::pair<uint64_t, uint64_t> audit_cost(uint64_t rounds, uint64_t per_block_sample) {
    return {per_block_sample * rounds, 2 * rounds};
}

namespace {

size_t expected_path_length(uint64_t claimed_count) {
    size_t padded = next_power_of_two(std::max<size_t>(1, static_cast<size_t>(claimed_count)));
    size_t length = 0;
    while (padded > 1) {
        padded >>= 1;
        ++length;
    }
    return length;
}

}  // namespace

Verdict run_audit(const AuditorView& view, ProviderChannel& channel,
                  const MatchingHead& head_tb, const MatchingHead& head_ba,
                  const VerifierRef& verifier, const AuditParams& params,
                  const EmbeddingProvider& designated, uint64_t seed,
                  AuditTranscript* transcript) {
    if (verifier.kind == VerifierKind::learned && verifier.model == nullptr) {
        throw std::invalid_argument("run_audit: learned verifier needs a model");
    }
    const uint64_t m = view.reported_reasoning_count;
    const uint64_t beta = params.block_size;
    const uint64_t alpha = (m + beta - 1) / beta;

    Rng rng(mix_key(seed, 0x61756474));
    Verdict verdict;
    verdict.audit_id = "audit-" + std::to_string(rng.next_u64() & 0xFFFFFFFFull);
    verdict.block_count = alpha;

    if (transcript) transcript->messages.push_back(commit_to_json(view.commitment));

    if (alpha == 0) {
        // Nothing to audit and nothing accepted: flagged by exhaustion.
        verdict.decision = AuditDecision::flagged_for_inflation;
        verdict.failure_reason = FailureReason::semantic_reject_exhausted;
        if (transcript) transcript->messages.push_back(verdict_to_json(verdict));
        return verdict;
    }

    // The block visit order is a seeded shuffle drawn up front: round one
    // takes the first ceil(gamma * alpha) blocks, every later round one more.
    std::vector<uint64_t> order(alpha);
    for (uint64_t i = 0; i < alpha; ++i) order[i] = i;
    rng.shuffle(order);
    const uint64_t first_round =
        std::max<uint64_t>(1, static_cast<uint64_t>(
                                  std::ceil(params.initial_ratio * static_cast<double>(alpha))));

    const size_t expected_depth = expected_path_length(m);
    const Embedding answer_embedding = designated.embed_block(view.answer);
    const size_t dim = designated.dimension();

    std::vector<MatchScorePair> scores;  // all evidence gathered so far
    scores.reserve(alpha);

    auto flag = [&](FailureReason reason) {
        verdict.decision = AuditDecision::flagged_for_inflation;
        verdict.failure_reason = reason;
        if (transcript) transcript->messages.push_back(verdict_to_json(verdict));
        return verdict;
    };

    uint64_t audited = 0;
    uint64_t round_begin = 0;  // index into `order` where the current round starts
    while (audited < alpha) {
        const uint64_t round_size = audited == 0 ? std::min<uint64_t>(first_round, alpha) : 1;
        round_begin = audited;
        for (uint64_t r = 0; r < round_size; ++r) {
            const uint64_t block_index = order[audited];
            const uint64_t block_begin = block_index * beta;
            const uint64_t block_len = std::min<uint64_t>(beta, m - block_begin);
            // Short final blocks sample proportionally, never zero.
            const uint64_t sample_count =
                block_len >= beta
                    ? std::min<uint64_t>(params.per_block_sample, block_len)
                    : std::max<uint64_t>(
                          1, std::min<uint64_t>(
                                 block_len, params.per_block_sample * block_len / beta));

            Challenge challenge;
            challenge.audit_id = verdict.audit_id;
            challenge.block_index = block_index;
            for (size_t offset : rng.sample_indices(static_cast<size_t>(block_len),
                                                    static_cast<size_t>(sample_count))) {
                challenge.token_indices.push_back(block_begin + offset);
            }
            if (transcript) transcript->messages.push_back(challenge_to_json(challenge));

            ChallengeResponse response;
            try {
                response = channel.challenge(challenge);
            } catch (const std::exception&) {
                ++audited;
                verdict.rounds = audited;
                verdict.exposed_block_fraction =
                    static_cast<double>(audited) / static_cast<double>(alpha);
                return flag(FailureReason::refusal);
            }
            if (transcript) transcript->messages.push_back(response_to_json(response));

            ++audited;
            verdict.rounds = audited;
            verdict.exposed_block_fraction =
                static_cast<double>(audited) / static_cast<double>(alpha);

            if (response.refused) return flag(FailureReason::refusal);
            if (response.fingerprints.size() != challenge.token_indices.size() ||
                response.paths.size() != challenge.token_indices.size() ||
                response.block_embedding.size() != dim) {
                return flag(FailureReason::merkle_mismatch);
            }

            std::vector<Embedding> sampled_tokens;
            sampled_tokens.reserve(response.fingerprints.size());
            for (size_t i = 0; i < response.fingerprints.size(); ++i) {
                const auto& bytes = response.fingerprints[i];
                const auto& path = response.paths[i];
                if (bytes.size() != 8 * dim || path.steps.size() != expected_depth) {
                    return flag(FailureReason::merkle_mismatch);
                }
                if (!verify_proof(view.commitment.root, bytes, path)) {
                    return flag(FailureReason::merkle_mismatch);
                }
                const TokenFingerprint fp = TokenFingerprint::deserialize(bytes, dim);
                if (fp.block_embedding != response.block_embedding) {
                    return flag(FailureReason::merkle_mismatch);
                }
                sampled_tokens.push_back(fp.token_embedding);
            }
            verdict.merkle_proofs_checked += response.fingerprints.size();

            MatchScorePair pair;
            pair.block_index = block_index;
            pair.s_tb = score_token_to_block(head_tb, sampled_tokens, response.block_embedding);
            pair.s_ba =
                score_block_to_answer(head_ba, response.block_embedding, answer_embedding);
            scores.push_back(pair);
            verdict.semantic_judgments += 2;
        }

        std::span<const MatchScorePair> evidence =
            params.cumulative_evidence
                ? std::span<const MatchScorePair>(scores)
                : std::span<const MatchScorePair>(scores.data() + round_begin,
                                                  scores.size() - round_begin);
        RoundDecision decision = RoundDecision::reject;
        if (!evidence.empty()) {
            if (verifier.kind == VerifierKind::rule) {
                decision = rule_verdict(evidence, verifier.tau);
            } else {
                decision = verifier.model->forward(evidence) > verifier.tau
                               ? RoundDecision::accept
                               : RoundDecision::reject;
            }
        }
        if (decision == RoundDecision::accept) {
            verdict.decision = AuditDecision::audit_successful;
            if (transcript) transcript->messages.push_back(verdict_to_json(verdict));
            return verdict;
        }
    }
    return flag(FailureReason::semantic_reject_exhausted);
}

}  // namespace coin
