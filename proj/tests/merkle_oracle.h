#pragma once

// Brute-force Merkle tree reference: recomputes everything from the leaf
// list on every call, following the recursive tree-head definition directly.
// Shares no code with the cached implementation under test.

#include <openssl/sha.h>

#include <vector>

#include "wait/core/bytes.h"

namespace waitsec::testing::oracle {

inline Hash32 sha(const Bytes& data) {
  Hash32 out{};
  SHA256(data.data(), data.size(), out.data());
  return out;
}

inline Hash32 leaf(const Bytes& leaf_bytes) {
  Bytes buf{0x00};
  buf.insert(buf.end(), leaf_bytes.begin(), leaf_bytes.end());
  return sha(buf);
}

inline Hash32 node(const Hash32& l, const Hash32& r) {
  Bytes buf{0x01};
  buf.insert(buf.end(), l.begin(), l.end());
  buf.insert(buf.end(), r.begin(), r.end());
  return sha(buf);
}

inline std::size_t split(std::size_t n) {
  std::size_t k = 1;
  while (k * 2 < n) k *= 2;
  return k;
}

using Leaves = std::vector<Hash32>;

inline Leaves slice(const Leaves& d, std::size_t from, std::size_t to) {
  return Leaves(d.begin() + static_cast<std::ptrdiff_t>(from),
                d.begin() + static_cast<std::ptrdiff_t>(to));
}

inline Hash32 mth(const Leaves& d) {
  if (d.empty()) return sha({});
  if (d.size() == 1) return d[0];
  std::size_t k = split(d.size());
  return node(mth(slice(d, 0, k)), mth(slice(d, k, d.size())));
}

inline std::vector<Hash32> path(std::size_t m, const Leaves& d) {
  if (d.size() <= 1) return {};
  std::size_t k = split(d.size());
  std::vector<Hash32> out;
  if (m < k) {
    out = path(m, slice(d, 0, k));
    out.push_back(mth(slice(d, k, d.size())));
  } else {
    out = path(m - k, slice(d, k, d.size()));
    out.push_back(mth(slice(d, 0, k)));
  }
  return out;
}

inline std::vector<Hash32> subproof(std::size_t m, const Leaves& d, bool b) {
  if (m == d.size()) {
    if (b) return {};
    return {mth(d)};
  }
  std::size_t k = split(d.size());
  std::vector<Hash32> out;
  if (m <= k) {
    out = subproof(m, slice(d, 0, k), b);
    out.push_back(mth(slice(d, k, d.size())));
  } else {
    out = subproof(m - k, slice(d, k, d.size()), false);
    out.push_back(mth(slice(d, 0, k)));
  }
  return out;
}

inline std::vector<Hash32> consistency(std::size_t m, const Leaves& d) {
  if (m == 0 || m == d.size()) return {};
  return subproof(m, d, true);
}

}  // namespace waitsec::testing::oracle
