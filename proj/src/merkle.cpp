#include "coin/merkle.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

#include <openssl/evp.h>

namespace coin {

Hash256 sha256(std::span<const uint8_t> data) {
    thread_local EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    Hash256 out{};
    unsigned int out_len = 0;
    if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, out.data(), &out_len) != 1 || out_len != out.size()) {
        throw std::runtime_error("sha256: digest failure");
    }
    return out;
}

std::string to_hex(const Hash256& hash) {
    static const char digits[] = "0123456789abcdef";
    std::string hex(64, '0');
    for (size_t i = 0; i < hash.size(); ++i) {
        hex[2 * i] = digits[hash[i] >> 4];
        hex[2 * i + 1] = digits[hash[i] & 0x0F];
    }
    return hex;
}

std::optional<Hash256> hash_from_hex(std::string_view hex) {
    if (hex.size() != 64) return std::nullopt;
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    Hash256 out{};
    for (size_t i = 0; i < out.size(); ++i) {
        const int hi = nibble(hex[2 * i]);
        const int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out[i] = static_cast<uint8_t>((hi << 4) | lo);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fingerprints
// ---------------------------------------------------------------------------

namespace {

void append_f32_le(std::vector<uint8_t>& buffer, float value) {
    const uint32_t bits = std::bit_cast<uint32_t>(value);
    buffer.push_back(static_cast<uint8_t>(bits));
    buffer.push_back(static_cast<uint8_t>(bits >> 8));
    buffer.push_back(static_cast<uint8_t>(bits >> 16));
    buffer.push_back(static_cast<uint8_t>(bits >> 24));
}

float read_f32_le(const uint8_t* bytes) {
    const uint32_t bits = static_cast<uint32_t>(bytes[0]) |
                          (static_cast<uint32_t>(bytes[1]) << 8) |
                          (static_cast<uint32_t>(bytes[2]) << 16) |
                          (static_cast<uint32_t>(bytes[3]) << 24);
    return std::bit_cast<float>(bits);
}

}  // namespace

void serialize_fingerprint_into(const Embedding& block_embedding,
                                const Embedding& token_embedding,
                                std::vector<uint8_t>& buffer) {
    buffer.clear();
    buffer.reserve(4 * (block_embedding.size() + token_embedding.size()));
    for (float v : block_embedding) append_f32_le(buffer, v);
    for (float v : token_embedding) append_f32_le(buffer, v);
}

std::vector<uint8_t> TokenFingerprint::serialize() const {
    std::vector<uint8_t> buffer;
    serialize_fingerprint_into(block_embedding, token_embedding, buffer);
    return buffer;
}

Hash256 TokenFingerprint::leaf_hash() const {
    return sha256(serialize());
}

TokenFingerprint TokenFingerprint::deserialize(std::span<const uint8_t> bytes, size_t dimension) {
    if (bytes.size() != 8 * dimension) {
        throw std::invalid_argument("TokenFingerprint::deserialize: wrong byte count");
    }
    TokenFingerprint fp;
    fp.block_embedding.resize(dimension);
    fp.token_embedding.resize(dimension);
    for (size_t i = 0; i < dimension; ++i) {
        fp.block_embedding[i] = read_f32_le(bytes.data() + 4 * i);
    }
    for (size_t i = 0; i < dimension; ++i) {
        fp.token_embedding[i] = read_f32_le(bytes.data() + 4 * (dimension + i));
    }
    return fp;
}

TokenFingerprint make_fingerprint(Embedding block_embedding, Embedding token_embedding) {
    if (block_embedding.size() != token_embedding.size()) {
        throw std::invalid_argument("make_fingerprint: dimension mismatch");
    }
    return TokenFingerprint{std::move(block_embedding), std::move(token_embedding)};
}

// ---------------------------------------------------------------------------
// Tree
// ---------------------------------------------------------------------------

size_t next_power_of_two(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

MerkleTree MerkleTree::build(const std::vector<TokenFingerprint>& fingerprints) {
    std::vector<Hash256> leaves;
    leaves.reserve(fingerprints.size());
    std::vector<uint8_t> buffer;
    for (const auto& fp : fingerprints) {
        serialize_fingerprint_into(fp.block_embedding, fp.token_embedding, buffer);
        leaves.push_back(sha256(buffer));
    }
    return build_from_leaves(std::move(leaves));
}

MerkleTree MerkleTree::build_from_leaves(std::vector<Hash256> leaf_hashes) {
    MerkleTree tree;
    tree.leaf_count_ = leaf_hashes.size();
    if (leaf_hashes.empty()) {
        leaf_hashes.push_back(sha256({}));
    } else {
        const size_t padded = next_power_of_two(leaf_hashes.size());
        leaf_hashes.resize(padded, leaf_hashes.back());
    }
    tree.levels_.push_back(std::move(leaf_hashes));
    while (tree.levels_.back().size() > 1) {
        const auto& below = tree.levels_.back();
        std::vector<Hash256> level(below.size() / 2);
        uint8_t pair[64];
        for (size_t i = 0; i < level.size(); ++i) {
            std::memcpy(pair, below[2 * i].data(), 32);
            std::memcpy(pair + 32, below[2 * i + 1].data(), 32);
            level[i] = sha256(pair);
        }
        tree.levels_.push_back(std::move(level));
    }
    return tree;
}

const Hash256& MerkleTree::root() const {
    return levels_.back().front();
}

size_t MerkleTree::padded_count() const {
    return levels_.front().size();
}

size_t MerkleTree::depth() const {
    return levels_.size() - 1;
}

MerklePath MerkleTree::prove(size_t index) const {
    if (index >= leaf_count_) {
        throw std::invalid_argument("MerkleTree::prove: leaf index out of range");
    }
    MerklePath path;
    path.steps.reserve(depth());
    size_t node = index;
    for (size_t level = 0; level + 1 < levels_.size(); ++level) {
        const size_t sibling = node ^ 1;
        path.steps.push_back(PathStep{levels_[level][sibling],
                                      (node & 1) ? Side::left : Side::right});
        node >>= 1;
    }
    return path;
}

bool verify_proof(const Hash256& root, std::span<const uint8_t> fingerprint_bytes,
                  const MerklePath& path) {
    Hash256 current = sha256(fingerprint_bytes);
    uint8_t pair[64];
    for (const auto& step : path.steps) {
        if (step.side == Side::left) {
            std::memcpy(pair, step.sibling.data(), 32);
            std::memcpy(pair + 32, current.data(), 32);
        } else if (step.side == Side::right) {
            std::memcpy(pair, current.data(), 32);
            std::memcpy(pair + 32, step.sibling.data(), 32);
        } else {
            return false;  // malformed position tag
        }
        current = sha256(pair);
    }
    return current == root;
}

bool verify_proof(const Hash256& root, const TokenFingerprint& fingerprint,
                  const MerklePath& path) {
    return verify_proof(root, fingerprint.serialize(), path);
}

}  // namespace coin
