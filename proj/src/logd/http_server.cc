#include "wait/logd/http_server.h"

#include <httplib.h>

#include <charconv>

#include "wait/core/error.h"

namespace waitsec::logd {
namespace {

using nlohmann::json;

void reply_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(to_string(canonical_bytes(body)), "application/json");
}

void reply_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  reply_json(res, {{"code", error_code_name(code)}, {"message", message}},
             http_status_for(code));
}

std::uint64_t query_uint(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) {
    throw Error(ErrorCode::kRange, std::string("missing parameter '") + name + "'");
  }
  std::string v = req.get_param_value(name);
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
    throw Error(ErrorCode::kRange, std::string("parameter '") + name + "' is not an integer");
  }
  return out;
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      reply_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      reply_error(res, ErrorCode::kStorage, e.what());
    }
  };
}

}  // namespace

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kActivePromise:
      return 409;
    case ErrorCode::kUnknownLeaf:
      return 404;
    case ErrorCode::kStorage:
      return 500;
    default:
      return 400;
  }
}

LogHttpServer::LogHttpServer(LogService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.Post("/wait/v1/submit", guarded([this](const httplib::Request& req,
                                           httplib::Response& res) {
           auto request = submission_request_from_json(parse_json(as_bytes(req.body)));
           reply_json(res, waitsec::to_json(service_.handle_submit(request)));
         }));
  s.Post("/wait/v1/renew", guarded([this](const httplib::Request& req,
                                          httplib::Response& res) {
           auto request = decode_renewal_request(as_bytes(req.body));
           reply_json(res, waitsec::to_json(service_.handle_renew(request)));
         }));
  s.Get("/wait/v1/sth", guarded([this](const httplib::Request&, httplib::Response& res) {
          reply_json(res, waitsec::to_json(service_.handle_sth()));
        }));
  s.Get("/wait/v1/proof", guarded([this](const httplib::Request& req,
                                         httplib::Response& res) {
          auto raw = base64url_decode(req.get_param_value("leaf_hash"));
          auto hash = raw ? to_fixed<32>(*raw) : std::nullopt;
          if (!hash) throw Error(ErrorCode::kEncoding, "leaf_hash must be base64url of 32 bytes");
          auto proof = service_.handle_inclusion_proof(*hash, query_uint(req, "tree_size"));
          reply_json(res, merklelog::to_json(proof));
        }));
  s.Get("/wait/v1/consistency", guarded([this](const httplib::Request& req,
                                               httplib::Response& res) {
          auto proof = service_.handle_consistency(query_uint(req, "old"), query_uint(req, "new"));
          reply_json(res, merklelog::to_json(proof));
        }));
  s.Get("/wait/v1/entries", guarded([this](const httplib::Request& req,
                                           httplib::Response& res) {
          auto records = service_.handle_entries(query_uint(req, "start"), query_uint(req, "end"));
          json arr = json::array();
          for (const auto& r : records) arr.push_back(merklelog::to_json(r));
          reply_json(res, {{"entries", arr}});
        }));
}

LogHttpServer::~LogHttpServer() { stop(); }

int LogHttpServer::start(const std::string& host, int port) {
  int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::kSetup, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void LogHttpServer::listen_blocking(const std::string& host, int port) {
  if (!server_->listen(host, port)) {
    throw Error(ErrorCode::kSetup, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void LogHttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace waitsec::logd
