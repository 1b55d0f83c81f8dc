#include "wait/core/header.h"

#include "wait/core/error.h"

namespace waitsec {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string promise_to_header(const std::vector<InclusionPromise>& promises) {
  if (promises.empty()) throw Error(ErrorCode::kEncoding, "no promises to encode");
  std::string out;
  for (const auto& p : promises) {
    if (!out.empty()) out += ",";
    out += base64url_encode(canonical_encode(p));
  }
  return out;
}

ParsedPromiseHeader parse_promise_header(std::string_view value) {
  ParsedPromiseHeader parsed;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    std::size_t comma = value.find(',', pos);
    if (comma == std::string_view::npos) comma = value.size();
    std::string_view token = trim(value.substr(pos, comma - pos));
    pos = comma + 1;
    if (token.empty()) continue;

    auto raw = base64url_decode(token);
    if (!raw) {
      ++parsed.undecodable;
      continue;
    }
    try {
      InclusionPromise p = decode_inclusion_promise(*raw);
      if (p.version != InclusionPromise::kCurrentVersion) {
        ++parsed.unknown_version;
      } else {
        parsed.promises.push_back(std::move(p));
      }
    } catch (const Error&) {
      ++parsed.undecodable;
    }
  }
  return parsed;
}

std::vector<InclusionPromise> header_to_promises(std::string_view value) {
  ParsedPromiseHeader parsed = parse_promise_header(value);
  if (parsed.decoded() == 0) {
    throw Error(ErrorCode::kHeaderSyntax, "no decodable inclusion promise in header");
  }
  return std::move(parsed.promises);
}

}  // namespace waitsec
