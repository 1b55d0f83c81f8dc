#include "wait/merklelog/log.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "wait/core/error.h"

namespace waitsec::merklelog {
namespace {

namespace fs = std::filesystem;

constexpr const char* kRecordsFile = "records.jsonl";
constexpr const char* kIndexFile = "leaves.idx";

[[noreturn]] void storage_error(const std::string& what) {
  throw Error(ErrorCode::kStorage, what);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int open_append(const fs::path& path) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) storage_error("cannot open " + path.string() + ": " + std::strerror(errno));
  return fd;
}

std::string index_line(const Hash32& hash, std::uint64_t index) {
  return to_hex(hash) + " " + std::to_string(index) + "\n";
}

}  // namespace

nlohmann::json to_json(const LogRecord& record) {
  return {{"appended_at", record.appended_at},
          {"index", record.index},
          {"leaf", waitsec::to_json(record.leaf)},
          {"leaf_hash", base64url_encode(record.leaf_hash)}};
}

LogRecord log_record_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.size() != 4 || !j.contains("appended_at") ||
      !j.contains("index") || !j.contains("leaf") || !j.contains("leaf_hash")) {
    throw Error(ErrorCode::kEncoding, "malformed log record");
  }
  if (!j["index"].is_number_unsigned() || !j["appended_at"].is_number_unsigned() ||
      !j["leaf_hash"].is_string()) {
    throw Error(ErrorCode::kEncoding, "malformed log record fields");
  }
  LogRecord r;
  r.index = j["index"].get<std::uint64_t>();
  r.appended_at = j["appended_at"].get<std::int64_t>();
  r.leaf = release_leaf_from_json(j["leaf"]);
  auto raw = base64url_decode(j["leaf_hash"].get<std::string>());
  auto fixed = raw ? to_fixed<32>(*raw) : std::nullopt;
  if (!fixed) throw Error(ErrorCode::kEncoding, "malformed leaf_hash");
  r.leaf_hash = *fixed;
  return r;
}

Hash32 release_leaf_hash(const ReleaseLeaf& leaf) {
  return leaf_hash(canonical_encode(leaf));
}

std::unique_ptr<MerkleLog> MerkleLog::in_memory() {
  return std::unique_ptr<MerkleLog>(new MerkleLog());
}

std::unique_ptr<MerkleLog> MerkleLog::open(const fs::path& dir, FaultHook hook) {
  std::unique_ptr<MerkleLog> log(new MerkleLog());
  log->hook_ = std::move(hook);
  log->load(dir);
  return log;
}

MerkleLog::~MerkleLog() {
  if (records_fd_ >= 0) ::close(records_fd_);
  if (index_fd_ >= 0) ::close(index_fd_);
}

void MerkleLog::load(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) storage_error("cannot create " + dir.string() + ": " + ec.message());
  dir_ = dir;

  const fs::path records_path = dir / kRecordsFile;
  std::string content = fs::exists(records_path) ? read_file(records_path) : std::string();

  // Anything after the last newline is a torn write from a crash.
  std::size_t complete = content.rfind('\n');
  complete = complete == std::string::npos ? 0 : complete + 1;
  if (complete != content.size()) {
    fs::resize_file(records_path, complete, ec);
    if (ec) storage_error("cannot truncate torn record: " + ec.message());
    content.resize(complete);
  }

  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    std::string_view line(content.data() + pos, nl - pos);
    pos = nl + 1;
    LogRecord record;
    try {
      record = log_record_from_json(parse_json(as_bytes(line)));
    } catch (const Error& e) {
      storage_error("corrupt record " + std::to_string(records_.size()) + ": " + e.what());
    }
    if (record.index != records_.size()) storage_error("record index out of sequence");
    if (to_string(canonical_bytes(to_json(record))) != line) {
      storage_error("record " + std::to_string(record.index) + " is not canonical");
    }
    if (release_leaf_hash(record.leaf) != record.leaf_hash) {
      storage_error("record " + std::to_string(record.index) + " leaf hash mismatch");
    }
    tree_.append(record.leaf_hash);
    by_hash_.emplace(record.leaf_hash, record.index);
    records_.push_back(std::move(record));
  }

  records_fd_ = open_append(records_path);
  load_or_rebuild_index();
}

void MerkleLog::load_or_rebuild_index() {
  const fs::path index_path = dir_ / kIndexFile;
  bool consistent = fs::exists(index_path);
  if (consistent) {
    std::string content = read_file(index_path);
    std::istringstream in(content);
    std::string hex;
    std::uint64_t index = 0;
    std::uint64_t expected = 0;
    while (in >> hex >> index) {
      auto raw = from_hex(hex);
      auto fixed = raw ? to_fixed<32>(*raw) : std::nullopt;
      if (!fixed || index != expected || index >= records_.size() ||
          records_[index].leaf_hash != *fixed) {
        consistent = false;
        break;
      }
      ++expected;
    }
    consistent = consistent && expected == records_.size() &&
                 (content.empty() || content.back() == '\n');
  }
  if (!consistent) {
    std::string rebuilt;
    for (const auto& r : records_) rebuilt += index_line(r.leaf_hash, r.index);
    const fs::path tmp = dir_ / (std::string(kIndexFile) + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << rebuilt;
      if (!out) storage_error("cannot write index");
    }
    std::error_code ec;
    fs::rename(tmp, index_path, ec);
    if (ec) storage_error("cannot install index: " + ec.message());
    index_rebuilt_ = true;
  }
  index_fd_ = open_append(index_path);
}

void MerkleLog::write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      storage_error(std::string("write failed: ") + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::pair<std::uint64_t, Hash32> MerkleLog::append(const ReleaseLeaf& leaf,
                                                   std::int64_t appended_at) {
  if (!verify_record(leaf)) {
    throw Error(ErrorCode::kBadSignature, "developer signature does not verify");
  }
  std::lock_guard writer(write_mu_);

  LogRecord record;
  record.index = records_.size();  // only this thread mutates records_
  record.leaf = leaf;
  record.leaf_hash = release_leaf_hash(leaf);
  record.appended_at = appended_at;

  if (records_fd_ >= 0) {
    const std::string line = to_string(canonical_bytes(to_json(record))) + "\n";
    const off_t old_end = ::lseek(records_fd_, 0, SEEK_END);
    auto fire = [this](KillPoint p) {
      if (hook_) hook_(p);
    };
    try {
      fire(KillPoint::kBeforeRecordWrite);
      if (hook_) {
        std::size_t half = line.size() / 2;
        write_all(records_fd_, std::string_view(line).substr(0, half));
        fire(KillPoint::kMidRecordWrite);
        write_all(records_fd_, std::string_view(line).substr(half));
      } else {
        write_all(records_fd_, line);
      }
      fire(KillPoint::kAfterRecordWrite);
      if (::fsync(records_fd_) != 0) {
        storage_error(std::string("fsync failed: ") + std::strerror(errno));
      }
      fire(KillPoint::kAfterRecordSync);
    } catch (const SimulatedCrash&) {
      throw;
    } catch (const std::exception& e) {
      // Roll the record file back so memory and disk agree.
      if (old_end >= 0 && ::ftruncate(records_fd_, old_end) == 0) ::fsync(records_fd_);
      if (const auto* err = dynamic_cast<const Error*>(&e);
          err && err->code() == ErrorCode::kStorage) {
        throw;
      }
      storage_error(e.what());
    }
    // The sidecar index is advisory; a failed write is repaired on next open.
    try {
      write_all(index_fd_, index_line(record.leaf_hash, record.index));
    } catch (const Error&) {
    }
    if (hook_) hook_(KillPoint::kAfterIndexWrite);
  }

  std::unique_lock lock(mu_);
  tree_.append(record.leaf_hash);
  by_hash_.emplace(record.leaf_hash, record.index);
  records_.push_back(record);
  return {record.index, record.leaf_hash};
}

std::uint64_t MerkleLog::size() const {
  std::shared_lock lock(mu_);
  return tree_.size();
}

TreeHead MerkleLog::head() const {
  std::shared_lock lock(mu_);
  return {tree_.size(), tree_.root_at(tree_.size())};
}

Hash32 MerkleLog::root_at(std::uint64_t size) const {
  std::shared_lock lock(mu_);
  return tree_.root_at(size);
}

InclusionProof MerkleLog::prove_inclusion(std::uint64_t index, std::uint64_t size) const {
  std::shared_lock lock(mu_);
  return tree_.prove_inclusion(index, size);
}

ConsistencyProof MerkleLog::prove_consistency(std::uint64_t old_size,
                                              std::uint64_t new_size) const {
  std::shared_lock lock(mu_);
  return tree_.prove_consistency(old_size, new_size);
}

std::optional<LogRecord> MerkleLog::find_leaf(const Hash32& leaf_hash) const {
  std::shared_lock lock(mu_);
  auto it = by_hash_.find(leaf_hash);
  if (it == by_hash_.end()) return std::nullopt;
  return records_[it->second];
}

std::vector<LogRecord> MerkleLog::entries(std::uint64_t start, std::uint64_t end) const {
  std::shared_lock lock(mu_);
  if (start > end || end > records_.size()) {
    throw Error(ErrorCode::kRange, "entry range out of bounds");
  }
  return {records_.begin() + static_cast<std::ptrdiff_t>(start),
          records_.begin() + static_cast<std::ptrdiff_t>(end)};
}

}  // namespace waitsec::merklelog
