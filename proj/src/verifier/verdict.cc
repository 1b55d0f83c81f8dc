#include "wait/verifier/verdict.h"

#include <algorithm>
#include <array>
#include <utility>

namespace waitsec {
namespace {

constexpr std::array<std::pair<Reason, std::string_view>, 34> kNames{{
    {Reason::kInsecureContext, "INSECURE_CONTEXT"},
    {Reason::kDowngrade, "DOWNGRADE"},
    {Reason::kHeaderSyntax, "HEADER_SYNTAX"},
    {Reason::kCspMissing, "CSP_MISSING"},
    {Reason::kCspNotHeader, "CSP_NOT_HEADER"},
    {Reason::kCspNoScriptPolicy, "CSP_NO_SCRIPT_POLICY"},
    {Reason::kCspUnsafeInline, "CSP_UNSAFE_INLINE"},
    {Reason::kCspUnsafeEval, "CSP_UNSAFE_EVAL"},
    {Reason::kCspUnsafeHashes, "CSP_UNSAFE_HASHES"},
    {Reason::kCspStrictDynamic, "CSP_STRICT_DYNAMIC"},
    {Reason::kCspNonce, "CSP_NONCE"},
    {Reason::kCspWildcard, "CSP_WILDCARD"},
    {Reason::kCspUnsafeScheme, "CSP_UNSAFE_SCHEME"},
    {Reason::kCspInsecureSource, "CSP_INSECURE_SOURCE"},
    {Reason::kCspObjectNotNone, "CSP_OBJECT_NOT_NONE"},
    {Reason::kCspMismatch, "CSP_MISMATCH"},
    {Reason::kDocParse, "DOC_PARSE"},
    {Reason::kDocInlineScript, "DOC_INLINE_SCRIPT"},
    {Reason::kDocInlineStyle, "DOC_INLINE_STYLE"},
    {Reason::kDocEventHandler, "DOC_EVENT_HANDLER"},
    {Reason::kDocJavascriptUrl, "DOC_JAVASCRIPT_URL"},
    {Reason::kDocMissingSri, "DOC_MISSING_SRI"},
    {Reason::kDocBadReference, "DOC_BAD_REFERENCE"},
    {Reason::kSriSyntax, "SRI_SYNTAX"},
    {Reason::kSriMismatch, "SRI_MISMATCH"},
    {Reason::kSriFetchFailed, "SRI_FETCH_FAILED"},
    {Reason::kPromiseMalformed, "PROMISE_MALFORMED"},
    {Reason::kPromiseUnsupportedVersion, "PROMISE_UNSUPPORTED_VERSION"},
    {Reason::kPromiseUntrustedLog, "PROMISE_UNTRUSTED_LOG"},
    {Reason::kPromiseBadSig, "PROMISE_BAD_SIG"},
    {Reason::kPromiseDigestMismatch, "PROMISE_DIGEST_MISMATCH"},
    {Reason::kPromiseUrlMismatch, "PROMISE_URL_MISMATCH"},
    {Reason::kPromiseExpired, "PROMISE_EXPIRED"},
    {Reason::kPromiseQuorum, "PROMISE_QUORUM"},
}};

}  // namespace

std::string_view reason_name(Reason reason) {
  for (const auto& [r, name] : kNames) {
    if (r == reason) return name;
  }
  return "UNKNOWN";
}

std::optional<Reason> reason_from_name(std::string_view name) {
  for (const auto& [r, n] : kNames) {
    if (n == name) return r;
  }
  return std::nullopt;
}

const std::vector<Reason>& all_reasons() {
  static const std::vector<Reason> reasons = [] {
    std::vector<Reason> out;
    for (const auto& entry : kNames) out.push_back(entry.first);
    return out;
  }();
  return reasons;
}

bool Verdict::has(Reason reason) const {
  return std::any_of(reasons.begin(), reasons.end(),
                     [&](const Finding& f) { return f.reason == reason; });
}

std::vector<std::string> Verdict::codes() const {
  std::vector<std::string> out;
  for (const auto& f : reasons) {
    std::string name(reason_name(f.reason));
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  return out;
}

}  // namespace waitsec
