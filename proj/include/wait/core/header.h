#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "wait/core/records.h"

namespace waitsec {

inline constexpr std::string_view kPromiseHeader = "X-WAIT-Inclusion-Promise";

// Comma-separated base64url(canonical promise bytes). Throws
// Error(kEncoding) for an empty list.
std::string promise_to_header(const std::vector<InclusionPromise>& promises);

struct ParsedPromiseHeader {
  std::vector<InclusionPromise> promises;  // version 1 only, in header order
  std::size_t unknown_version = 0;         // decoded but skipped
  std::size_t undecodable = 0;             // not base64url / not a promise

  std::size_t decoded() const { return promises.size() + unknown_version; }
};

// Lenient parse that accounts for every token. Never throws.
ParsedPromiseHeader parse_promise_header(std::string_view value);

// Throws Error(kHeaderSyntax) when no entry decodes. Unknown versions are
// skipped.
std::vector<InclusionPromise> header_to_promises(std::string_view value);

}  // namespace waitsec
