#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wait/core/bytes.h"
#include "wait/verifier/verdict.h"

namespace waitsec {

enum class ResourceKind { kScript, kStylesheet, kOther };

std::string_view resource_kind_name(ResourceKind kind);

struct ReferencedResource {
  std::string reference;  // attribute value as written (references decoded)
  ResourceKind kind = ResourceKind::kScript;
  std::string integrity;  // may be empty when a finding was raised
  friend bool operator==(const ReferencedResource&, const ReferencedResource&) = default;
};

struct CoverageResult {
  std::vector<Finding> findings;
  std::vector<ReferencedResource> resources;
  bool parsed = true;
  std::optional<std::string> meta_csp;
};

// Checks that the main document transitively covers every piece of
// executable content: each script has src and integrity, each stylesheet
// link has integrity, and there is no inline code or javascript: URL.
CoverageResult check_document_coverage(ByteView document);

struct SriToken {
  std::array<std::uint8_t, 48> digest{};
};

// Accepts exactly one "sha384-<base64>" token, optionally surrounded by
// whitespace. Throws Error(kSriSyntax) otherwise.
SriToken parse_sri(std::string_view text);

// "sha384-" + base64(SHA-384(content)).
std::string compute_sri(ByteView content);

// Throws Error(kSriSyntax) for a malformed token.
bool verify_subresource_integrity(ByteView content, std::string_view sri);

}  // namespace waitsec
