#include "wait/verifier/promises.h"

#include "wait/core/bytes.h"

namespace waitsec {

PromiseCheck verify_promises(const std::vector<InclusionPromise>& promises,
                             const Digest& document_digest, std::string_view app_url,
                             const ValidationConfig& config, std::int64_t now) {
  PromiseCheck check;
  for (std::size_t i = 0; i < promises.size(); ++i) {
    const InclusionPromise& p = promises[i];
    std::string tag = "promise " + std::to_string(i) + " ";
    if (p.version != InclusionPromise::kCurrentVersion) {
      check.findings.push_back({Reason::kPromiseUnsupportedVersion, tag + "version " + std::to_string(p.version)});
      continue;
    }
    const LogIdentity* log = config.trusted_log(p.log_id);
    if (!log) {
      check.findings.push_back({Reason::kPromiseUntrustedLog, tag + "log " + to_hex(p.log_id)});
      continue;
    }
    if (!verify_record(p, log->public_key)) {
      check.findings.push_back({Reason::kPromiseBadSig, tag + "signature does not verify"});
      continue;
    }
    bool ok = true;
    if (p.digest != document_digest) {
      check.findings.push_back({Reason::kPromiseDigestMismatch,
                                tag + p.digest.to_string() + " != " + document_digest.to_string()});
      ok = false;
    }
    if (p.app_url != app_url) {
      check.findings.push_back({Reason::kPromiseUrlMismatch, tag + p.app_url + " != " + std::string(app_url)});
      ok = false;
    }
    if (now < p.issued_at - config.clock_tolerance || now > p.expires_at + config.clock_tolerance) {
      check.findings.push_back({Reason::kPromiseExpired, tag + "valid " + std::to_string(p.issued_at) + ".." +
                                                             std::to_string(p.expires_at) + " at " +
                                                             std::to_string(now)});
      ok = false;
    }
    if (ok) check.valid_logs.insert(p.log_id);
  }
  check.valid = static_cast<std::int64_t>(check.valid_logs.size()) >= config.required_promises;
  if (!check.valid && (check.findings.empty() || !check.valid_logs.empty())) {
    check.findings.push_back({Reason::kPromiseQuorum,
                              std::to_string(check.valid_logs.size()) + " of " +
                                  std::to_string(config.required_promises) + " distinct logs"});
  }
  return check;
}

}  // namespace waitsec
