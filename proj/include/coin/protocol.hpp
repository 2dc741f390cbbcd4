#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coin/core.hpp"
#include "coin/matching.hpp"
#include "coin/merkle.hpp"
#include "coin/verifier.hpp"

namespace coin {

// ---------------------------------------------------------------------------
// Wire messages (JSON, one object per line)
// ---------------------------------------------------------------------------

struct Challenge {
    std::string audit_id;
    uint64_t block_index = 0;
    std::vector<uint64_t> token_indices;  // global indices in [0, m)
};

struct ChallengeResponse {
    std::string audit_id;
    bool refused = false;
    std::string refusal_reason;
    Embedding block_embedding;
    std::vector<std::vector<uint8_t>> fingerprints;  // committed bytes, base64 on the wire
    std::vector<MerklePath> paths;
};

struct Verdict;

nlohmann::json commit_to_json(const MerkleCommitment& commitment);
nlohmann::json challenge_to_json(const Challenge& challenge);
nlohmann::json response_to_json(const ChallengeResponse& response);
nlohmann::json verdict_to_json(const Verdict& verdict);

std::optional<MerkleCommitment> commit_from_json(const nlohmann::json& msg);
std::optional<Challenge> challenge_from_json(const nlohmann::json& msg);
std::optional<ChallengeResponse> response_from_json(const nlohmann::json& msg);

// ---------------------------------------------------------------------------
// Provider side
// ---------------------------------------------------------------------------

// Holds the full (private) record, the fingerprint tree over the reasoning
// tokens it actually possesses, and the commitment it publishes. The
// committed m comes from the record's billing report and may exceed the real
// token supply for a misreporting provider.
class ProviderSession {
public:
    ProviderSession(ServiceRecord record, std::shared_ptr<const EmbeddingProvider> provider,
                    uint64_t block_size, std::string provider_id = "cola");

    const MerkleCommitment& commitment() const { return commitment_; }
    ChallengeResponse respond(const Challenge& challenge) const;

    const ServiceRecord& record() const { return record_; }
    size_t actual_token_count() const { return record_.reasoning.size(); }
    const MerkleTree& tree() const { return tree_; }
    const Embedding& block_embedding(size_t block_index) const;

private:
    ServiceRecord record_;
    std::shared_ptr<const EmbeddingProvider> provider_;
    uint64_t block_size_;
    std::vector<Embedding> block_embeddings_;
    std::vector<Embedding> token_embeddings_;
    MerkleTree tree_;
    MerkleCommitment commitment_;
};

// Transport abstraction between auditor and provider. Implementations carry
// only the typed message schema; the auditor never sees raw reasoning.
class ProviderChannel {
public:
    virtual ~ProviderChannel() = default;
    virtual ChallengeResponse challenge(const Challenge& challenge) = 0;
};

class InProcessChannel final : public ProviderChannel {
public:
    explicit InProcessChannel(const ProviderSession& session) : session_(&session) {}
    ChallengeResponse challenge(const Challenge& challenge) override {
        return session_->respond(challenge);
    }

private:
    const ProviderSession* session_;
};

// Round-trips every message through its JSON wire encoding; used to pin the
// wire format in tests and by the CLI when replaying transcripts.
class JsonWireChannel final : public ProviderChannel {
public:
    explicit JsonWireChannel(const ProviderSession& session) : session_(&session) {}
    ChallengeResponse challenge(const Challenge& challenge) override;

private:
    const ProviderSession* session_;
};

// ---------------------------------------------------------------------------
// Auditor side
// ---------------------------------------------------------------------------

// What the auditor may see: prompt, answer, billing report, commitment.
struct AuditorView {
    TokenSeq prompt;
    TokenSeq answer;
    uint64_t reported_reasoning_count = 0;  // m
    uint64_t reported_answer_count = 0;     // n
    MerkleCommitment commitment;
};

AuditorView auditor_view_of(const ServiceRecord& record, const MerkleCommitment& commitment);

enum class AuditDecision { audit_successful, flagged_for_inflation };
enum class FailureReason { merkle_mismatch, semantic_reject_exhausted, refusal };

const char* to_string(AuditDecision decision);
const char* to_string(FailureReason reason);

struct Verdict {
    std::string audit_id;
    AuditDecision decision = AuditDecision::flagged_for_inflation;
    uint64_t rounds = 0;                  // l: audited blocks
    uint64_t merkle_proofs_checked = 0;   // k*l on full blocks
    uint64_t semantic_judgments = 0;      // 2 per scored block
    uint64_t block_count = 0;             // alpha
    double exposed_block_fraction = 0.0;  // l / alpha
    std::optional<FailureReason> failure_reason;
};

using AuditVerdict = Verdict;

struct AuditTranscript {
    std::vector<nlohmann::json> messages;
    std::string to_jsonl() const;
};

// Which verifier decides each round. `model` is required for learned.
struct VerifierRef {
    VerifierKind kind = VerifierKind::rule;
    double tau = 0.6;
    const DeepSetsModel* model = nullptr;
};

// Multi-round audit. Round one covers ceil(gamma * alpha) distinct random
// blocks; while the verifier rejects, one further unverified block is audited
// per round until acceptance or exhaustion. Per audited block the auditor
// samples token indices, checks every Merkle path (length and fold) against
// the commitment, cross-checks the response block embedding against the
// fingerprints, and computes (S_tb, S_ba). Any Merkle failure or refusal is
// immediately terminal.
Verdict run_audit(const AuditorView& view, ProviderChannel& channel,
                  const MatchingHead& head_tb, const MatchingHead& head_ba,
                  const VerifierRef& verifier, const AuditParams& params,
                  const EmbeddingProvider& designated, uint64_t seed,
                  AuditTranscript* transcript = nullptr);

// (merkle_proofs, semantic_judgments) = (k*l, 2*l).
std::pair<uint64_t, uint64_t> audit_cost(uint64_t rounds, uint64_t per_block_sample);

}  // namespace coin
