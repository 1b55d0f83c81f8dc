#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace waitsec {

// Minimal HTML start-tag scanner. It knows enough of the tokenizer rules to
// find every element and attribute with exact byte offsets, so callers can
// rewrite attributes without touching any other byte.
struct HtmlAttribute {
  std::string name;   // lowercased
  std::string value;  // character references decoded
  bool has_value = false;
  std::size_t begin = 0;        // first byte of the name
  std::size_t end = 0;          // one past the value (or name)
  std::size_t value_begin = 0;  // raw value span, quotes excluded
  std::size_t value_end = 0;
};

struct HtmlElement {
  std::string name;  // lowercased
  std::vector<HtmlAttribute> attributes;
  std::size_t begin = 0;       // '<'
  std::size_t end = 0;         // one past '>'
  std::size_t insert_at = 0;   // where a new attribute can be inserted
  std::size_t text_begin = 0;  // raw text content of script and style
  std::size_t text_end = 0;

  const HtmlAttribute* attribute(std::string_view name) const;
  bool has(std::string_view name) const { return attribute(name) != nullptr; }
};

struct HtmlDocument {
  std::vector<HtmlElement> elements;  // start tags in document order
  // Content of the first <meta http-equiv="Content-Security-Policy">.
  std::optional<std::string> meta_csp;
};

// Throws Error(kParse) on unterminated comments, tags, quoted values or raw
// text elements.
HtmlDocument parse_html(std::string_view text);

// Escapes a value for use inside a double-quoted attribute.
std::string html_escape_attribute(std::string_view value);

// Splits on ASCII whitespace.
std::vector<std::string> split_whitespace(std::string_view text);

std::string ascii_lower(std::string_view text);

}  // namespace waitsec
