#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "wait/core/error.h"
#include "wait/logd/service.h"

namespace httplib {
class Server;
}

namespace waitsec::logd {

// Exposes a LogService over JSON-over-HTTP:
//   POST /wait/v1/submit   body: {"leaf": ReleaseLeaf}  -> InclusionPromise
//   POST /wait/v1/renew    body: RenewalRequest         -> InclusionPromise
//   GET  /wait/v1/sth                                   -> SignedTreeHead
//   GET  /wait/v1/proof?leaf_hash=&tree_size=           -> InclusionProof
//   GET  /wait/v1/consistency?old=&new=                 -> ConsistencyProof
//   GET  /wait/v1/entries?start=&end=                   -> {"entries": [LogRecord]}
// Errors are {"code": "ERR_*", "message": "..."} with status 400, 404, 409
// (ERR_ACTIVE_PROMISE) or 500 (ERR_STORAGE).
class LogHttpServer {
 public:
  explicit LogHttpServer(LogService& service);
  ~LogHttpServer();

  // Binds and starts serving on a background thread. Port 0 picks an
  // ephemeral port. Returns the bound port; Error(kSetup) on failure.
  int start(const std::string& host, int port);
  // Blocks serving on the calling thread.
  void listen_blocking(const std::string& host, int port);
  void stop();

 private:
  LogService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

int http_status_for(ErrorCode code);

}  // namespace waitsec::logd
