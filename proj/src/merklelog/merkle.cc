#include "wait/merklelog/merkle.h"

#include <bit>

#include "wait/core/crypto.h"
#include "wait/core/error.h"

namespace waitsec::merklelog {
namespace {

// Largest power of two strictly less than n (n >= 2).
std::uint64_t split_point(std::uint64_t n) { return std::bit_floor(n - 1); }

bool is_power_of_two(std::uint64_t n) { return n != 0 && (n & (n - 1)) == 0; }

nlohmann::json path_json(const std::vector<Hash32>& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& h : path) arr.push_back(base64url_encode(h));
  return arr;
}

std::vector<Hash32> path_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kEncoding, "path must be an array");
  std::vector<Hash32> out;
  for (const auto& item : j) {
    if (!item.is_string()) throw Error(ErrorCode::kEncoding, "path entry must be a string");
    auto raw = base64url_decode(item.get<std::string>());
    auto fixed = raw ? to_fixed<32>(*raw) : std::nullopt;
    if (!fixed) throw Error(ErrorCode::kEncoding, "path entry is not a 32-byte hash");
    out.push_back(*fixed);
  }
  return out;
}

std::uint64_t get_size(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_number_unsigned()) {
    throw Error(ErrorCode::kEncoding, std::string("missing or invalid '") + key + "'");
  }
  return j.at(key).get<std::uint64_t>();
}

}  // namespace

Hash32 leaf_hash(ByteView leaf_bytes) {
  Bytes buf;
  buf.reserve(leaf_bytes.size() + 1);
  buf.push_back(0x00);
  buf.insert(buf.end(), leaf_bytes.begin(), leaf_bytes.end());
  return sha256(buf);
}

Hash32 node_hash(const Hash32& left, const Hash32& right) {
  std::array<std::uint8_t, 65> buf{};
  buf[0] = 0x01;
  std::copy(left.begin(), left.end(), buf.begin() + 1);
  std::copy(right.begin(), right.end(), buf.begin() + 33);
  return sha256(buf);
}

Hash32 empty_root() { return sha256({}); }

bool verify_inclusion(const Hash32& leaf, const InclusionProof& proof,
                      const Hash32& expected_root) {
  if (proof.leaf_index >= proof.tree_size) return false;
  std::uint64_t fn = proof.leaf_index;
  std::uint64_t sn = proof.tree_size - 1;
  Hash32 r = leaf;
  for (const Hash32& p : proof.path) {
    if (sn == 0) return false;
    if ((fn & 1) || fn == sn) {
      r = node_hash(p, r);
      while (!(fn & 1) && fn != 0) {
        fn >>= 1;
        sn >>= 1;
      }
    } else {
      r = node_hash(r, p);
    }
    fn >>= 1;
    sn >>= 1;
  }
  return sn == 0 && r == expected_root;
}

bool verify_inclusion(const Hash32& leaf, const InclusionProof& proof,
                      const TreeHead& head) {
  return proof.tree_size == head.size && verify_inclusion(leaf, proof, head.root);
}

bool verify_consistency(const Hash32& old_root, const Hash32& new_root,
                        const ConsistencyProof& proof) {
  if (proof.old_size > proof.new_size) return false;
  if (proof.old_size == proof.new_size) {
    return proof.path.empty() && old_root == new_root;
  }
  if (proof.old_size == 0) {
    return proof.path.empty() && old_root == empty_root();
  }

  std::vector<Hash32> path;
  path.reserve(proof.path.size() + 1);
  if (is_power_of_two(proof.old_size)) path.push_back(old_root);
  path.insert(path.end(), proof.path.begin(), proof.path.end());
  if (path.empty()) return false;

  std::uint64_t fn = proof.old_size - 1;
  std::uint64_t sn = proof.new_size - 1;
  while (fn & 1) {
    fn >>= 1;
    sn >>= 1;
  }
  Hash32 fr = path[0];
  Hash32 sr = path[0];
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Hash32& c = path[i];
    if (sn == 0) return false;
    if ((fn & 1) || fn == sn) {
      fr = node_hash(c, fr);
      sr = node_hash(c, sr);
      while (!(fn & 1) && fn != 0) {
        fn >>= 1;
        sn >>= 1;
      }
    } else {
      sr = node_hash(sr, c);
    }
    fn >>= 1;
    sn >>= 1;
  }
  return sn == 0 && fr == old_root && sr == new_root;
}

bool verify_consistency(const TreeHead& old_head, const TreeHead& new_head,
                        const ConsistencyProof& proof) {
  return proof.old_size == old_head.size && proof.new_size == new_head.size &&
         verify_consistency(old_head.root, new_head.root, proof);
}

nlohmann::json to_json(const InclusionProof& proof) {
  return {{"leaf_index", proof.leaf_index},
          {"path", path_json(proof.path)},
          {"tree_size", proof.tree_size}};
}

nlohmann::json to_json(const ConsistencyProof& proof) {
  return {{"new_size", proof.new_size},
          {"old_size", proof.old_size},
          {"path", path_json(proof.path)}};
}

InclusionProof inclusion_proof_from_json(const nlohmann::json& j) {
  InclusionProof p;
  p.leaf_index = get_size(j, "leaf_index");
  p.tree_size = get_size(j, "tree_size");
  p.path = path_from_json(j.at("path"));
  return p;
}

ConsistencyProof consistency_proof_from_json(const nlohmann::json& j) {
  ConsistencyProof p;
  p.old_size = get_size(j, "old_size");
  p.new_size = get_size(j, "new_size");
  p.path = path_from_json(j.at("path"));
  return p;
}

void MerkleTree::append(const Hash32& leaf) {
  if (levels_.empty()) levels_.emplace_back();
  levels_[0].push_back(leaf);
  for (std::size_t k = 0; levels_[k].size() % 2 == 0; ++k) {
    const auto& level = levels_[k];
    Hash32 parent = node_hash(level[level.size() - 2], level.back());
    if (levels_.size() == k + 1) levels_.emplace_back();
    levels_[k + 1].push_back(parent);
  }
}

Hash32 MerkleTree::subtree(std::uint64_t start, std::uint64_t count) const {
  if (is_power_of_two(count) && start % count == 0) {
    auto level = static_cast<std::size_t>(std::countr_zero(count));
    return levels_[level][start / count];
  }
  std::uint64_t k = split_point(count);
  return node_hash(subtree(start, k), subtree(start + k, count - k));
}

Hash32 MerkleTree::root_at(std::uint64_t size) const {
  if (size > this->size()) throw Error(ErrorCode::kRange, "tree size out of range");
  if (size == 0) return empty_root();
  return subtree(0, size);
}

void MerkleTree::path(std::uint64_t index, std::uint64_t start, std::uint64_t count,
                      std::vector<Hash32>& out) const {
  if (count == 1) return;
  std::uint64_t k = split_point(count);
  if (index < k) {
    path(index, start, k, out);
    out.push_back(subtree(start + k, count - k));
  } else {
    path(index - k, start + k, count - k, out);
    out.push_back(subtree(start, k));
  }
}

InclusionProof MerkleTree::prove_inclusion(std::uint64_t index, std::uint64_t size) const {
  if (size > this->size() || index >= size) {
    throw Error(ErrorCode::kRange, "inclusion proof parameters out of range");
  }
  InclusionProof proof{index, size, {}};
  path(index, 0, size, proof.path);
  return proof;
}

void MerkleTree::subproof(std::uint64_t old_size, std::uint64_t start, std::uint64_t count,
                          bool complete, std::vector<Hash32>& out) const {
  if (old_size == count) {
    if (!complete) out.push_back(subtree(start, count));
    return;
  }
  std::uint64_t k = split_point(count);
  if (old_size <= k) {
    subproof(old_size, start, k, complete, out);
    out.push_back(subtree(start + k, count - k));
  } else {
    subproof(old_size - k, start + k, count - k, false, out);
    out.push_back(subtree(start, k));
  }
}

ConsistencyProof MerkleTree::prove_consistency(std::uint64_t old_size,
                                               std::uint64_t new_size) const {
  if (old_size > new_size || new_size > size()) {
    throw Error(ErrorCode::kRange, "consistency proof parameters out of range");
  }
  ConsistencyProof proof{old_size, new_size, {}};
  if (old_size > 0 && old_size < new_size) {
    subproof(old_size, 0, new_size, true, proof.path);
  }
  return proof;
}

}  // namespace waitsec::merklelog
