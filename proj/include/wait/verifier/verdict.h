#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace waitsec {

enum class Reason {
  kInsecureContext,
  kDowngrade,
  kHeaderSyntax,
  kCspMissing,
  kCspNotHeader,
  kCspNoScriptPolicy,
  kCspUnsafeInline,
  kCspUnsafeEval,
  kCspUnsafeHashes,
  kCspStrictDynamic,
  kCspNonce,
  kCspWildcard,
  kCspUnsafeScheme,
  kCspInsecureSource,
  kCspObjectNotNone,
  kCspMismatch,
  kDocParse,
  kDocInlineScript,
  kDocInlineStyle,
  kDocEventHandler,
  kDocJavascriptUrl,
  kDocMissingSri,
  kDocBadReference,
  kSriSyntax,
  kSriMismatch,
  kSriFetchFailed,
  kPromiseMalformed,
  kPromiseUnsupportedVersion,
  kPromiseUntrustedLog,
  kPromiseBadSig,
  kPromiseDigestMismatch,
  kPromiseUrlMismatch,
  kPromiseExpired,
  kPromiseQuorum,
};

// Wire names, e.g. "PROMISE_DIGEST_MISMATCH".
std::string_view reason_name(Reason reason);
std::optional<Reason> reason_from_name(std::string_view name);
const std::vector<Reason>& all_reasons();

struct Finding {
  Reason reason;
  std::string detail;
  friend bool operator==(const Finding&, const Finding&) = default;
};

enum class Decision { kAllow, kBlock };

struct Verdict {
  Decision decision = Decision::kAllow;
  std::vector<Finding> reasons;  // empty iff ALLOW
  std::int64_t checked_at = 0;

  bool allowed() const { return decision == Decision::kAllow; }
  bool has(Reason reason) const;
  // Distinct reason names in first-seen order.
  std::vector<std::string> codes() const;
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

}  // namespace waitsec
