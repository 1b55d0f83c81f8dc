#include "wait/logd/client.h"

#include <httplib.h>

#include "wait/core/error.h"
#include "wait/core/url.h"
#include "wait/logd/service.h"

namespace waitsec::logd {
namespace {

using nlohmann::json;
using merklelog::ConsistencyProof;
using merklelog::InclusionProof;
using merklelog::LogRecord;

class HttpLogClient final : public LogApi {
 public:
  explicit HttpLogClient(const std::string& base_url) : base_(base_url) {
    auto url = Url::parse(base_url);
    if (!url) throw Error(ErrorCode::kUrl, "invalid log base URL: " + base_url);
    prefix_ = url->path == "/" ? "" : url->path;
    if (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    client_ = std::make_unique<httplib::Client>(url->origin());
    client_->set_connection_timeout(5);
    client_->set_read_timeout(30);
  }

  InclusionPromise submit(const ReleaseLeaf& leaf) override {
    json body = to_json(SubmissionRequest{leaf});
    return inclusion_promise_from_json(post("/wait/v1/submit", body));
  }

  InclusionPromise renew(const RenewalRequest& request) override {
    return inclusion_promise_from_json(post("/wait/v1/renew", waitsec::to_json(request)));
  }

  SignedTreeHead sth() override { return signed_tree_head_from_json(get("/wait/v1/sth")); }

  InclusionProof inclusion_proof(const Hash32& leaf_hash, std::uint64_t tree_size) override {
    return merklelog::inclusion_proof_from_json(
        get("/wait/v1/proof?leaf_hash=" + base64url_encode(leaf_hash) +
            "&tree_size=" + std::to_string(tree_size)));
  }

  ConsistencyProof consistency(std::uint64_t old_size, std::uint64_t new_size) override {
    return merklelog::consistency_proof_from_json(
        get("/wait/v1/consistency?old=" + std::to_string(old_size) +
            "&new=" + std::to_string(new_size)));
  }

  std::vector<LogRecord> entries(std::uint64_t start, std::uint64_t end) override {
    json j = get("/wait/v1/entries?start=" + std::to_string(start) +
                 "&end=" + std::to_string(end));
    if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array()) {
      throw Error(ErrorCode::kEncoding, "malformed entries response");
    }
    std::vector<LogRecord> out;
    for (const auto& item : j["entries"]) out.push_back(merklelog::log_record_from_json(item));
    return out;
  }

 private:
  json get(const std::string& path) { return handle(client_->Get(prefix_ + path)); }

  json post(const std::string& path, const json& body) {
    return handle(client_->Post(prefix_ + path, to_string(canonical_bytes(body)),
                                "application/json"));
  }

  json handle(const httplib::Result& result) {
    if (!result) {
      throw Error(ErrorCode::kNetwork,
                  base_ + ": " + httplib::to_string(result.error()));
    }
    json body = json::parse(result->body, nullptr, false);
    if (result->status != 200) {
      std::optional<ErrorCode> code;
      std::string message = result->body;
      if (body.is_object() && body.contains("code") && body["code"].is_string()) {
        code = error_code_from_name(body["code"].get<std::string>());
        if (body.contains("message") && body["message"].is_string()) {
          message = body["message"].get<std::string>();
        }
      }
      throw Error(code.value_or(ErrorCode::kNetwork),
                  "log responded " + std::to_string(result->status) + ": " + message);
    }
    if (body.is_discarded()) throw Error(ErrorCode::kEncoding, "log returned invalid JSON");
    return body;
  }

  std::string base_;
  std::string prefix_;
  std::unique_ptr<httplib::Client> client_;
};

class LocalLogClient final : public LogApi {
 public:
  explicit LocalLogClient(LogService& service) : service_(service) {}

  InclusionPromise submit(const ReleaseLeaf& leaf) override {
    return service_.handle_submit({leaf});
  }
  InclusionPromise renew(const RenewalRequest& request) override {
    return service_.handle_renew(request);
  }
  SignedTreeHead sth() override { return service_.handle_sth(); }
  InclusionProof inclusion_proof(const Hash32& leaf_hash, std::uint64_t tree_size) override {
    return service_.handle_inclusion_proof(leaf_hash, tree_size);
  }
  ConsistencyProof consistency(std::uint64_t old_size, std::uint64_t new_size) override {
    return service_.handle_consistency(old_size, new_size);
  }
  std::vector<LogRecord> entries(std::uint64_t start, std::uint64_t end) override {
    return service_.handle_entries(start, end);
  }

 private:
  LogService& service_;
};

}  // namespace

std::unique_ptr<LogApi> make_http_client(const std::string& base_url) {
  return std::make_unique<HttpLogClient>(base_url);
}

std::unique_ptr<LogApi> make_local_client(LogService& service) {
  return std::make_unique<LocalLogClient>(service);
}

LogClientFactory http_log_clients() {
  return [](const LogIdentity& log) { return make_http_client(log.base_url); };
}

}  // namespace waitsec::logd
