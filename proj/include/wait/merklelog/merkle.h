#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "wait/core/bytes.h"

namespace waitsec::merklelog {

// Domain-separated hashing: 0x00 prefix for leaves, 0x01 for interior nodes.
Hash32 leaf_hash(ByteView leaf_bytes);
Hash32 node_hash(const Hash32& left, const Hash32& right);
// Head of the empty tree: SHA-256 of the empty byte sequence.
Hash32 empty_root();

struct TreeHead {
  std::uint64_t size = 0;
  Hash32 root{};

  friend bool operator==(const TreeHead&, const TreeHead&) = default;
};

struct InclusionProof {
  std::uint64_t leaf_index = 0;
  std::uint64_t tree_size = 0;
  std::vector<Hash32> path;  // leaf-to-root order

  friend bool operator==(const InclusionProof&, const InclusionProof&) = default;
};

struct ConsistencyProof {
  std::uint64_t old_size = 0;
  std::uint64_t new_size = 0;
  std::vector<Hash32> path;

  friend bool operator==(const ConsistencyProof&, const ConsistencyProof&) = default;
};

// Recomputes the root from the leaf hash along the path. Structural check
// only: the proof's tree_size is trusted.
bool verify_inclusion(const Hash32& leaf, const InclusionProof& proof,
                      const Hash32& expected_root);
// As above, and the proof must be for the head's size.
bool verify_inclusion(const Hash32& leaf, const InclusionProof& proof,
                      const TreeHead& head);

bool verify_consistency(const Hash32& old_root, const Hash32& new_root,
                        const ConsistencyProof& proof);
bool verify_consistency(const TreeHead& old_head, const TreeHead& new_head,
                        const ConsistencyProof& proof);

nlohmann::json to_json(const InclusionProof& proof);
nlohmann::json to_json(const ConsistencyProof& proof);
// Error(kEncoding) on malformed input.
InclusionProof inclusion_proof_from_json(const nlohmann::json& j);
ConsistencyProof consistency_proof_from_json(const nlohmann::json& j);

// In-memory Merkle tree over leaf hashes. Complete power-of-two subtrees are
// cached per level, so roots and proofs for any prefix size cost O(log^2 n).
// Not synchronized; MerkleLog wraps it.
class MerkleTree {
 public:
  void append(const Hash32& leaf);

  std::uint64_t size() const { return levels_.empty() ? 0 : levels_[0].size(); }
  const Hash32& leaf(std::uint64_t index) const { return levels_.at(0).at(index); }

  // Error(kRange) unless size <= this->size().
  Hash32 root_at(std::uint64_t size) const;
  // Error(kRange) unless index < size <= this->size().
  InclusionProof prove_inclusion(std::uint64_t index, std::uint64_t size) const;
  // Error(kRange) unless old_size <= new_size <= this->size().
  ConsistencyProof prove_consistency(std::uint64_t old_size, std::uint64_t new_size) const;

 private:
  Hash32 subtree(std::uint64_t start, std::uint64_t count) const;
  void path(std::uint64_t index, std::uint64_t start, std::uint64_t count,
            std::vector<Hash32>& out) const;
  void subproof(std::uint64_t old_size, std::uint64_t start, std::uint64_t count,
                bool complete, std::vector<Hash32>& out) const;

  // levels_[k][i] is the hash of leaves [i * 2^k, (i + 1) * 2^k).
  std::vector<std::vector<Hash32>> levels_;
};

}  // namespace waitsec::merklelog
