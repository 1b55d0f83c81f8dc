#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wait/core/bytes.h"
#include "wait/core/url.h"
#include "wait/verifier/config.h"
#include "wait/verifier/pinstore.h"
#include "wait/verifier/verdict.h"

namespace waitsec {

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

// All values of a header joined with ", ", matched case-insensitively.
std::optional<std::string> find_header(const HttpHeaders& headers, std::string_view name);

// Returns the body of a referenced resource, or nullopt if it cannot be
// retrieved.
using SubresourceFetcher = std::function<std::optional<Bytes>(const Url&)>;

// True iff the URL is https or its host is a loopback address. Error(kUrl)
// if the URL does not parse.
bool assert_secure_context(std::string_view url);

// Full client-side decision. Stages after the header gate all run, so a
// BLOCK lists every failing check. On ALLOW of a WAIT-protected response the
// pin for the URL is created or refreshed.
Verdict decide(ByteView document, const HttpHeaders& headers, std::string_view url,
               PinStore& pins, const ValidationConfig& config, std::int64_t now,
               const SubresourceFetcher& fetch);

}  // namespace waitsec
