#pragma once

#include <cstdint>
#include <set>
#include <string_view>
#include <vector>

#include "wait/core/records.h"
#include "wait/verifier/config.h"
#include "wait/verifier/verdict.h"

namespace waitsec {

struct PromiseCheck {
  bool valid = false;
  std::set<Hash32> valid_logs;  // distinct log ids with an acceptable promise
  std::vector<Finding> findings;
};

// A promise counts when its log is trusted and its signature verifies, its
// digest and app URL match exactly, and
//   issued_at - tolerance <= now <= expires_at + tolerance.
// Valid iff the number of distinct counted logs reaches required_promises.
// Findings describe every rejected promise even when the set is valid.
PromiseCheck verify_promises(const std::vector<InclusionPromise>& promises,
                             const Digest& document_digest, std::string_view app_url,
                             const ValidationConfig& config, std::int64_t now);

}  // namespace waitsec
