#include "wait/core/files.h"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "wait/core/error.h"

namespace waitsec {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content, bool owner_only) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC,
                  owner_only ? 0600 : 0644);
  if (fd < 0) {
    throw Error(ErrorCode::kIo, "cannot create " + tmp.string() + ": " + std::strerror(errno));
  }
  std::string_view rest = content;
  bool ok = true;
  while (ok && !rest.empty()) {
    ssize_t n = ::write(fd, rest.data(), rest.size());
    if (n < 0 && errno == EINTR) continue;
    ok = n > 0;
    if (ok) rest.remove_prefix(static_cast<std::size_t>(n));
  }
  ok = ok && ::fsync(fd) == 0;
  ::close(fd);
  if (!ok || ::rename(tmp.c_str(), path.c_str()) != 0) {
    ::unlink(tmp.c_str());
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
}

DeveloperKey load_key_file(const fs::path& path) {
  std::string text = read_file(path);
  try {
    return developer_key_from_json(parse_json(as_bytes(text)));
  } catch (const Error& e) {
    throw Error(ErrorCode::kBadKey, path.string() + ": " + e.what());
  }
}

void save_key_file(const fs::path& path, const DeveloperKey& key) {
  write_file_atomic(path, to_string(canonical_bytes(to_json(key))) + "\n",
                    key.private_seed.has_value());
}

std::vector<LogIdentity> load_log_list(const fs::path& path) {
  nlohmann::json j = parse_json(as_bytes(read_file(path)));
  if (!j.is_array()) throw Error(ErrorCode::kEncoding, path.string() + ": expected a JSON array");
  std::vector<LogIdentity> out;
  for (const auto& item : j) out.push_back(log_identity_from_json(item));
  return out;
}

std::string log_list_json(const std::vector<LogIdentity>& logs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& l : logs) arr.push_back(to_json(l));
  return arr.dump();
}

}  // namespace waitsec
