#include "wait/verifier/csp.h"

#include <algorithm>

#include "wait/verifier/html.h"

namespace waitsec {
namespace {

bool valid_directive_name(std::string_view name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
  });
}

// Effective source list for a fetch directive, following the CSP fallback
// chain down to default-src.
const std::vector<std::string>* effective(const CspPolicy& policy,
                                          std::initializer_list<std::string_view> chain) {
  for (auto name : chain) {
    if (const auto* list = policy.find(name)) return list;
  }
  return nullptr;
}

void check_sources(std::string_view directive, const std::vector<std::string>& sources,
                   std::vector<Finding>& out) {
  auto add = [&](Reason r, const std::string& source) {
    Finding f{r, std::string(directive) + " " + source};
    if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(std::move(f));
  };
  for (const auto& source : sources) {
    std::string s = ascii_lower(source);
    if (s == "'unsafe-inline'") {
      add(Reason::kCspUnsafeInline, source);
    } else if (s == "'unsafe-eval'" || s == "'wasm-unsafe-eval'") {
      add(Reason::kCspUnsafeEval, source);
    } else if (s == "'unsafe-hashes'") {
      add(Reason::kCspUnsafeHashes, source);
    } else if (s == "'strict-dynamic'") {
      add(Reason::kCspStrictDynamic, source);
    } else if (s.rfind("'nonce-", 0) == 0) {
      add(Reason::kCspNonce, source);
    } else if (s == "data:" || s == "blob:" || s == "filesystem:") {
      add(Reason::kCspUnsafeScheme, source);
    } else if (s == "http:" || s.rfind("http://", 0) == 0 || s == "ws:" ||
               s.rfind("ws://", 0) == 0) {
      add(Reason::kCspInsecureSource, source);
    } else if (s == "*" || s == "https:" || s == "wss:" || s.find('*') != std::string::npos) {
      add(Reason::kCspWildcard, source);
    }
  }
}

}  // namespace

const std::vector<std::string>* CspPolicy::find(std::string_view name) const {
  for (const auto& [n, sources] : directives) {
    if (n == name) return &sources;
  }
  return nullptr;
}

std::string CspPolicy::to_string() const {
  std::string out;
  for (const auto& [name, sources] : directives) {
    if (!out.empty()) out += "; ";
    out += name;
    for (const auto& s : sources) out += " " + s;
  }
  return out;
}

CspPolicy parse_csp(std::string_view header_value) {
  CspPolicy policy;
  std::string_view first = header_value.substr(0, header_value.find(','));
  std::size_t start = 0;
  while (start <= first.size()) {
    std::size_t semi = first.find(';', start);
    if (semi == std::string_view::npos) semi = first.size();
    auto tokens = split_whitespace(first.substr(start, semi - start));
    start = semi + 1;
    if (tokens.empty()) continue;
    std::string name = ascii_lower(tokens.front());
    if (!valid_directive_name(name)) {
      policy.malformed.push_back(tokens.front());
      continue;
    }
    if (policy.find(name)) continue;
    policy.directives.emplace_back(name, std::vector<std::string>(tokens.begin() + 1, tokens.end()));
  }
  return policy;
}

std::vector<Finding> check_csp_strict(const CspPolicy& policy) {
  std::vector<Finding> out;
  const auto* script = effective(policy, {"script-src", "default-src"});
  if (!script) {
    out.push_back({Reason::kCspNoScriptPolicy, "no script-src or default-src"});
  } else {
    check_sources(policy.find("script-src") ? "script-src" : "default-src", *script, out);
  }
  if (const auto* style = effective(policy, {"style-src", "default-src"})) {
    check_sources(policy.find("style-src") ? "style-src" : "default-src", *style, out);
  }
  // Element and attribute variants override the general directive in
  // browsers that support them.
  for (std::string_view name :
       {"script-src-elem", "script-src-attr", "style-src-elem", "style-src-attr"}) {
    if (const auto* list = policy.find(name)) check_sources(name, *list, out);
  }
  const auto* object = effective(policy, {"object-src", "default-src"});
  if (!object || object->size() != 1 || ascii_lower(object->front()) != "'none'") {
    out.push_back({Reason::kCspObjectNotNone, "object-src must be 'none'"});
  }
  return out;
}

}  // namespace waitsec
