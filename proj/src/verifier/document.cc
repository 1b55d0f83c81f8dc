#include "wait/verifier/document.h"

#include <algorithm>
#include <cctype>

#include "wait/core/crypto.h"
#include "wait/core/error.h"
#include "wait/verifier/html.h"

namespace waitsec {
namespace {

bool has_token(std::string_view list, std::string_view token) {
  for (const auto& t : split_whitespace(list)) {
    if (ascii_lower(t) == token) return true;
  }
  return false;
}

// Browsers strip leading control characters and whitespace and ignore tabs
// and newlines inside the scheme.
bool is_javascript_url(std::string_view value) {
  std::string cleaned;
  for (char c : value) {
    auto u = static_cast<unsigned char>(c);
    if (u <= 0x20 && cleaned.empty()) continue;
    if (c == '\t' || c == '\n' || c == '\r') continue;
    cleaned += static_cast<char>(std::tolower(u));
    if (cleaned.size() >= 11) break;
  }
  return cleaned.rfind("javascript:", 0) == 0;
}

}  // namespace

std::string_view resource_kind_name(ResourceKind kind) {
  switch (kind) {
    case ResourceKind::kScript: return "script";
    case ResourceKind::kStylesheet: return "stylesheet";
    case ResourceKind::kOther: return "other";
  }
  return "other";
}

CoverageResult check_document_coverage(ByteView document) {
  CoverageResult result;
  HtmlDocument doc;
  try {
    doc = parse_html(std::string_view(reinterpret_cast<const char*>(document.data()),
                                      document.size()));
  } catch (const Error& e) {
    result.parsed = false;
    result.findings.push_back({Reason::kDocParse, e.what()});
    return result;
  }
  result.meta_csp = doc.meta_csp;
  auto add = [&](Reason r, std::string detail) { result.findings.push_back({r, std::move(detail)}); };

  for (const auto& el : doc.elements) {
    for (const auto& attr : el.attributes) {
      if (attr.name.size() > 2 && attr.name.rfind("on", 0) == 0) {
        add(Reason::kDocEventHandler, "<" + el.name + " " + attr.name + ">");
      } else if (attr.name == "style") {
        add(Reason::kDocInlineStyle, "<" + el.name + " style>");
      }
      if (attr.has_value && is_javascript_url(attr.value)) {
        add(Reason::kDocJavascriptUrl, "<" + el.name + " " + attr.name + ">");
      }
    }

    const HtmlAttribute* ref = nullptr;
    ResourceKind kind = ResourceKind::kScript;
    if (el.name == "script") {
      ref = el.attribute("src");
      if (!ref) {
        add(Reason::kDocInlineScript, "<script> without src");
        continue;
      }
    } else if (el.name == "style") {
      add(Reason::kDocInlineStyle, "<style> element");
      continue;
    } else if (el.name == "link") {
      const HtmlAttribute* rel = el.attribute("rel");
      if (!rel || !has_token(rel->value, "stylesheet")) continue;
      ref = el.attribute("href");
      kind = ResourceKind::kStylesheet;
      if (!ref) continue;
    } else {
      continue;
    }

    std::string tag = "<" + el.name + " " + ref->value + ">";
    if (split_whitespace(ref->value).empty()) {
      add(Reason::kDocBadReference, tag + " empty reference");
      continue;
    }
    ReferencedResource res{ref->value, kind, ""};
    const HtmlAttribute* integrity = el.attribute("integrity");
    if (!integrity) {
      add(Reason::kDocMissingSri, tag);
    } else {
      try {
        parse_sri(integrity->value);
        res.integrity = integrity->value;
      } catch (const Error&) {
        add(Reason::kSriSyntax, tag + " integrity=\"" + integrity->value + "\"");
      }
    }
    result.resources.push_back(std::move(res));
  }
  return result;
}

SriToken parse_sri(std::string_view text) {
  auto tokens = split_whitespace(text);
  if (tokens.size() != 1) throw Error(ErrorCode::kSriSyntax, "expected one integrity token");
  std::string_view token = tokens.front();
  // Options after '?' are reserved by the SRI grammar and ignored.
  token = token.substr(0, token.find('?'));
  constexpr std::string_view kPrefix = "sha384-";
  if (token.substr(0, kPrefix.size()) != kPrefix) {
    throw Error(ErrorCode::kSriSyntax, "integrity must use sha384");
  }
  auto raw = base64_decode(token.substr(kPrefix.size()));
  if (!raw) throw Error(ErrorCode::kSriSyntax, "integrity digest is not base64");
  auto digest = to_fixed<48>(*raw);
  if (!digest) throw Error(ErrorCode::kSriSyntax, "integrity digest must be 48 bytes");
  return SriToken{*digest};
}

std::string compute_sri(ByteView content) {
  auto digest = sha384(content);
  return "sha384-" + base64_encode(digest);
}

bool verify_subresource_integrity(ByteView content, std::string_view sri) {
  SriToken token = parse_sri(sri);
  return sha384(content) == token.digest;
}

}  // namespace waitsec
