#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wait/core/records.h"
#include "wait/merklelog/merkle.h"

namespace waitsec::merklelog {

struct LogRecord {
  std::uint64_t index = 0;
  ReleaseLeaf leaf;
  Hash32 leaf_hash{};
  std::int64_t appended_at = 0;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

nlohmann::json to_json(const LogRecord& record);
LogRecord log_record_from_json(const nlohmann::json& j);

// Hash of the canonical leaf bytes, i.e. the Merkle leaf unit.
Hash32 release_leaf_hash(const ReleaseLeaf& leaf);

// Points inside append() at which a test hook may simulate a crash.
enum class KillPoint {
  kBeforeRecordWrite,
  kMidRecordWrite,  // half of the record line is on disk
  kAfterRecordWrite,
  kAfterRecordSync,
  kAfterIndexWrite,
};

// Thrown by fault hooks to model a process crash: append() propagates it
// without any cleanup, exactly as if the process had died there.
struct SimulatedCrash {
  KillPoint at;
};

using FaultHook = std::function<void(KillPoint)>;

struct Hash32Hasher {
  std::size_t operator()(const Hash32& h) const noexcept {
    std::size_t v = 0;
    for (std::size_t i = 0; i < sizeof(v); ++i) v = (v << 8) | h[i];
    return v;
  }
};

// Append-only log of ReleaseLeaf entries backed by a Merkle tree.
//
// Storage layout in the data directory:
//   records.jsonl  one canonical LogRecord per line, '\n' terminated
//   leaves.idx     sidecar "<hex leaf hash> <index>" lines, rebuilt on open
//                  when missing or inconsistent
//
// A torn trailing record line (crash mid-write) is truncated on open. Single
// writer; readers take a shared lock and see a consistent snapshot.
class MerkleLog {
 public:
  static std::unique_ptr<MerkleLog> in_memory();
  // Error(kStorage) if the directory cannot be used or records are corrupt.
  static std::unique_ptr<MerkleLog> open(const std::filesystem::path& dir,
                                         FaultHook hook = {});

  ~MerkleLog();
  MerkleLog(const MerkleLog&) = delete;
  MerkleLog& operator=(const MerkleLog&) = delete;

  // Appends a leaf whose developer signature verifies. The record is synced
  // to disk before returning. Error(kBadSignature) for an invalid leaf;
  // Error(kStorage) on persistence failure, with log state unchanged.
  std::pair<std::uint64_t, Hash32> append(const ReleaseLeaf& leaf,
                                          std::int64_t appended_at);

  std::uint64_t size() const;
  TreeHead head() const;
  Hash32 root_at(std::uint64_t size) const;
  InclusionProof prove_inclusion(std::uint64_t index, std::uint64_t size) const;
  ConsistencyProof prove_consistency(std::uint64_t old_size, std::uint64_t new_size) const;

  std::optional<LogRecord> find_leaf(const Hash32& leaf_hash) const;
  // Records [start, end), end exclusive. Error(kRange) unless
  // start <= end <= size().
  std::vector<LogRecord> entries(std::uint64_t start, std::uint64_t end) const;

  bool index_was_rebuilt() const { return index_rebuilt_; }

 private:
  MerkleLog() = default;

  void load(const std::filesystem::path& dir);
  void load_or_rebuild_index();
  void write_all(int fd, std::string_view data);

  mutable std::shared_mutex mu_;
  std::mutex write_mu_;

  MerkleTree tree_;
  std::vector<LogRecord> records_;
  std::unordered_map<Hash32, std::uint64_t, Hash32Hasher> by_hash_;

  std::filesystem::path dir_;
  int records_fd_ = -1;
  int index_fd_ = -1;
  FaultHook hook_;
  bool index_rebuilt_ = false;
};

}  // namespace waitsec::merklelog
