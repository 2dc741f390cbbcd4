#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coin/embedding.hpp"

namespace coin {

using Hash256 = std::array<uint8_t, 32>;

Hash256 sha256(std::span<const uint8_t> data);
std::string to_hex(const Hash256& hash);
std::optional<Hash256> hash_from_hex(std::string_view hex);

// ---------------------------------------------------------------------------
// Token fingerprints
// ---------------------------------------------------------------------------

// The Merkle leaf preimage: block embedding followed by the single-token
// embedding. Serialized as 2*d 32-bit little-endian floats; the committed
// bytes are exactly what travels back during a challenge, so any float
// re-encoding shows up as a failed proof.
struct TokenFingerprint {
    Embedding block_embedding;
    Embedding token_embedding;

    std::vector<uint8_t> serialize() const;
    Hash256 leaf_hash() const;

    static TokenFingerprint deserialize(std::span<const uint8_t> bytes, size_t dimension);
};

TokenFingerprint make_fingerprint(Embedding block_embedding, Embedding token_embedding);

// Serializes straight into a reusable buffer; used by providers hashing
// large fingerprint streams.
void serialize_fingerprint_into(const Embedding& block_embedding,
                                const Embedding& token_embedding,
                                std::vector<uint8_t>& buffer);

// ---------------------------------------------------------------------------
// Merkle tree
// ---------------------------------------------------------------------------

enum class Side : uint8_t { left, right };

struct PathStep {
    Hash256 sibling;
    Side side;  // position of the sibling relative to the path node
};

struct MerklePath {
    std::vector<PathStep> steps;
};

// Leaves are SHA-256 of serialized fingerprints, padded to the next power of
// two by duplicating the last leaf hash; an empty set commits to H("").
// Parents hash the 64-byte left-then-right child concatenation, so leaf and
// interior preimages stay in separate domains by length.
class MerkleTree {
public:
    static MerkleTree build(const std::vector<TokenFingerprint>& fingerprints);
    static MerkleTree build_from_leaves(std::vector<Hash256> leaf_hashes);

    const Hash256& root() const;
    size_t leaf_count() const { return leaf_count_; }    // N
    size_t padded_count() const;                         // next power of two (1 when N == 0)
    size_t depth() const;                                // log2(padded_count)

    // Sibling hashes from leaf `index` (must be < leaf_count) up to the root.
    // Duplicated padding leaves are not auditable indices.
    MerklePath prove(size_t index) const;

private:
    std::vector<std::vector<Hash256>> levels_;  // levels_[0] = padded leaves
    size_t leaf_count_ = 0;
};

// Recomputes the root from H(fingerprint bytes) by folding the path and
// compares with the commitment.
bool verify_proof(const Hash256& root, std::span<const uint8_t> fingerprint_bytes,
                  const MerklePath& path);
bool verify_proof(const Hash256& root, const TokenFingerprint& fingerprint,
                  const MerklePath& path);

size_t next_power_of_two(size_t n);

// ---------------------------------------------------------------------------
// Commitment
// ---------------------------------------------------------------------------

// The provider's binding pledge: Merkle root over every billed reasoning
// token's fingerprint plus the claimed count m.
struct MerkleCommitment {
    Hash256 root{};
    uint64_t claimed_count = 0;  // m
    std::string provider_id;
};

}  // namespace coin
