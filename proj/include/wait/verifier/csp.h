#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wait/verifier/verdict.h"

namespace waitsec {

struct CspPolicy {
  // Directive names lowercased, in header order, first occurrence only.
  std::vector<std::pair<std::string, std::vector<std::string>>> directives;
  // Segments dropped because the directive name is not a valid token.
  std::vector<std::string> malformed;

  const std::vector<std::string>* find(std::string_view name) const;
  bool empty() const { return directives.empty(); }
  // Canonical rendering: "name src src; name src".
  std::string to_string() const;
};

// Only the first policy of a comma-separated list is read. Enforcing
// several policies is never weaker than enforcing the first one alone.
CspPolicy parse_csp(std::string_view header_value);

// Empty result means strict. One finding per failed clause and directive.
std::vector<Finding> check_csp_strict(const CspPolicy& policy);

}  // namespace waitsec
