#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "wait/core/records.h"
#include "wait/merklelog/log.h"

namespace waitsec::logd {

class LogService;

// Read/write access to one transparency log. Implementations throw Error:
// the log's own ERR_* code for rejections, kNetwork when unreachable.
class LogApi {
 public:
  virtual ~LogApi() = default;

  virtual InclusionPromise submit(const ReleaseLeaf& leaf) = 0;
  virtual InclusionPromise renew(const RenewalRequest& request) = 0;
  virtual SignedTreeHead sth() = 0;
  virtual merklelog::InclusionProof inclusion_proof(const Hash32& leaf_hash,
                                                    std::uint64_t tree_size) = 0;
  virtual merklelog::ConsistencyProof consistency(std::uint64_t old_size,
                                                  std::uint64_t new_size) = 0;
  virtual std::vector<merklelog::LogRecord> entries(std::uint64_t start,
                                                    std::uint64_t end) = 0;
};

// Talks to a log at LogIdentity::base_url.
std::unique_ptr<LogApi> make_http_client(const std::string& base_url);

// Direct in-process calls, same error behaviour as HTTP.
std::unique_ptr<LogApi> make_local_client(LogService& service);

using LogClientFactory = std::function<std::unique_ptr<LogApi>(const LogIdentity&)>;

// HTTP client for LogIdentity::base_url.
LogClientFactory http_log_clients();

}  // namespace waitsec::logd
