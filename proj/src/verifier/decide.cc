#include "wait/verifier/decide.h"

#include "wait/core/crypto.h"
#include "wait/core/error.h"
#include "wait/core/header.h"
#include "wait/verifier/csp.h"
#include "wait/verifier/document.h"
#include "wait/verifier/html.h"
#include "wait/verifier/promises.h"

namespace waitsec {
namespace {

Verdict block(std::vector<Finding> reasons, std::int64_t now) {
  return Verdict{Decision::kBlock, std::move(reasons), now};
}

void check_subresources(const CoverageResult& coverage, const Url& base,
                        const SubresourceFetcher& fetch, std::vector<Finding>& out) {
  for (const auto& res : coverage.resources) {
    auto target = resolve_url(base, res.reference);
    if (!target || !(target->scheme == "https" || target->is_loopback())) {
      out.push_back({Reason::kDocBadReference, res.reference});
      continue;
    }
    if (res.integrity.empty()) continue;
    std::optional<Bytes> body;
    try {
      body = fetch ? fetch(*target) : std::nullopt;
    } catch (const std::exception&) {
      body.reset();
    }
    if (!body) {
      out.push_back({Reason::kSriFetchFailed, target->to_string()});
    } else if (!verify_subresource_integrity(*body, res.integrity)) {
      out.push_back({Reason::kSriMismatch, target->to_string()});
    }
  }
}

}  // namespace

std::optional<std::string> find_header(const HttpHeaders& headers, std::string_view name) {
  std::string wanted = ascii_lower(name);
  std::optional<std::string> out;
  for (const auto& [key, value] : headers) {
    if (ascii_lower(key) != wanted) continue;
    if (out) {
      *out += ", " + value;
    } else {
      out = value;
    }
  }
  return out;
}

bool assert_secure_context(std::string_view url) {
  auto parsed = Url::parse(url);
  if (!parsed) throw Error(ErrorCode::kUrl, "cannot parse URL " + std::string(url));
  return parsed->scheme == "https" || parsed->is_loopback();
}

Verdict decide(ByteView document, const HttpHeaders& headers, std::string_view url,
               PinStore& pins, const ValidationConfig& config, std::int64_t now,
               const SubresourceFetcher& fetch) {
  auto parsed_url = Url::parse(url);
  if (!parsed_url) return block({{Reason::kInsecureContext, "unparseable URL"}}, now);
  std::string app_url = parsed_url->without_query();

  auto promise_header = find_header(headers, kPromiseHeader);
  if (!promise_header) {
    if (auto pin = pins.active(app_url, now)) {
      return block({{Reason::kDowngrade, "pinned until " + std::to_string(pin->expires)}}, now);
    }
    return Verdict{Decision::kAllow, {}, now};
  }
  if (!(parsed_url->scheme == "https" || parsed_url->is_loopback())) {
    return block({{Reason::kInsecureContext, parsed_url->origin()}}, now);
  }

  std::vector<Finding> findings;

  CoverageResult coverage = check_document_coverage(document);
  if (auto csp_header = find_header(headers, "Content-Security-Policy")) {
    auto csp = check_csp_strict(parse_csp(*csp_header));
    findings.insert(findings.end(), csp.begin(), csp.end());
    // The copy inside the document is covered by the digest, so the header
    // has to match it exactly.
    if (coverage.meta_csp && *coverage.meta_csp != *csp_header) {
      findings.push_back({Reason::kCspMismatch, "header differs from the policy in the document"});
    }
  } else {
    if (coverage.meta_csp) {
      findings.push_back({Reason::kCspNotHeader, "policy only in a meta element"});
    } else {
      findings.push_back({Reason::kCspMissing, "no Content-Security-Policy header"});
    }
  }
  findings.insert(findings.end(), coverage.findings.begin(), coverage.findings.end());
  if (coverage.parsed) check_subresources(coverage, *parsed_url, fetch, findings);

  ParsedPromiseHeader parsed = parse_promise_header(*promise_header);
  if (parsed.decoded() == 0) {
    findings.push_back({Reason::kHeaderSyntax, "no decodable inclusion promise"});
  } else {
    PromiseCheck check = verify_promises(parsed.promises, digest_bytes(document), app_url, config, now);
    if (!check.valid) {
      for (std::size_t i = 0; i < parsed.undecodable; ++i) {
        findings.push_back({Reason::kPromiseMalformed, "undecodable header entry"});
      }
      for (std::size_t i = 0; i < parsed.unknown_version; ++i) {
        findings.push_back({Reason::kPromiseUnsupportedVersion, "unknown promise version"});
      }
      findings.insert(findings.end(), check.findings.begin(), check.findings.end());
    }
    if (findings.empty()) {
      pins.record_success(app_url, now, check.valid_logs, config.pin_max_age);
      return Verdict{Decision::kAllow, {}, now};
    }
  }
  return block(std::move(findings), now);
}

}  // namespace waitsec
