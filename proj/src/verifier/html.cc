#include "wait/verifier/html.h"

#include <cctype>
#include <cstdlib>

#include "wait/core/error.h"

namespace waitsec {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

void append_utf8(std::string& out, unsigned long cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// Decodes numeric references and the handful of named ones that matter for
// URLs and policy strings. Unknown references are kept verbatim.
std::string decode_references(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '&') {
      out += raw[i];
      continue;
    }
    std::size_t semi = raw.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out += raw[i];
      continue;
    }
    std::string_view name = raw.substr(i + 1, semi - i - 1);
    if (!name.empty() && name[0] == '#') {
      std::string digits(name.substr(1));
      int base = 10;
      if (!digits.empty() && (digits[0] == 'x' || digits[0] == 'X')) {
        base = 16;
        digits.erase(0, 1);
      }
      char* endp = nullptr;
      unsigned long cp = digits.empty() ? 0 : std::strtoul(digits.c_str(), &endp, base);
      if (digits.empty() || *endp != '\0') {
        out += raw[i];
        continue;
      }
      append_utf8(out, cp);
    } else if (name == "amp") {
      out += '&';
    } else if (name == "quot") {
      out += '"';
    } else if (name == "apos") {
      out += '\'';
    } else if (name == "lt") {
      out += '<';
    } else if (name == "gt") {
      out += '>';
    } else if (name == "colon") {
      out += ':';
    } else if (name == "Tab") {
      out += '\t';
    } else if (name == "NewLine") {
      out += '\n';
    } else {
      out += raw[i];
      continue;
    }
    i = semi;
  }
  return out;
}

bool starts_with_ci(std::string_view text, std::size_t pos, std::string_view prefix) {
  if (text.size() - pos < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) != prefix[i]) return false;
  }
  return true;
}

[[noreturn]] void fail(std::string_view what, std::size_t pos) {
  throw Error(ErrorCode::kParse, std::string(what) + " at byte " + std::to_string(pos));
}

class Scanner {
 public:
  explicit Scanner(std::string_view text) : s_(text) {}

  HtmlDocument run() {
    while (pos_ < s_.size()) {
      std::size_t lt = s_.find('<', pos_);
      if (lt == std::string_view::npos) break;
      pos_ = lt;
      if (s_.compare(pos_, 4, "<!--") == 0) {
        std::size_t close = s_.find("-->", pos_ + 4);
        if (close == std::string_view::npos) fail("unterminated comment", pos_);
        pos_ = close + 3;
      } else if (pos_ + 1 < s_.size() && (s_[pos_ + 1] == '!' || s_[pos_ + 1] == '?')) {
        std::size_t close = s_.find('>', pos_);
        if (close == std::string_view::npos) fail("unterminated declaration", pos_);
        pos_ = close + 1;
      } else if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '/') {
        if (pos_ + 2 < s_.size() && is_alpha(s_[pos_ + 2])) {
          skip_end_tag();
        } else {
          pos_ += 2;
        }
      } else if (pos_ + 1 < s_.size() && is_alpha(s_[pos_ + 1])) {
        start_tag();
      } else {
        ++pos_;
      }
    }
    return std::move(doc_);
  }

 private:
  void skip_end_tag() {
    std::size_t start = pos_;
    pos_ += 2;
    while (pos_ < s_.size() && s_[pos_] != '>') {
      char q = s_[pos_];
      if (q == '"' || q == '\'') {
        std::size_t close = s_.find(q, pos_ + 1);
        if (close == std::string_view::npos) fail("unterminated quote", pos_);
        pos_ = close;
      }
      ++pos_;
    }
    if (pos_ >= s_.size()) fail("unterminated end tag", start);
    ++pos_;
  }

  void start_tag() {
    HtmlElement el;
    el.begin = pos_;
    ++pos_;
    std::size_t name_begin = pos_;
    while (pos_ < s_.size() && !is_space(s_[pos_]) && s_[pos_] != '/' && s_[pos_] != '>') ++pos_;
    el.name = ascii_lower(s_.substr(name_begin, pos_ - name_begin));
    for (;;) {
      while (pos_ < s_.size() && (is_space(s_[pos_]) || s_[pos_] == '/')) {
        if (s_[pos_] == '/' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '>') break;
        ++pos_;
      }
      if (pos_ >= s_.size()) fail("unterminated tag", el.begin);
      if (s_[pos_] == '>') {
        el.insert_at = pos_;
        ++pos_;
        break;
      }
      if (s_[pos_] == '/') {
        el.insert_at = pos_;
        pos_ += 2;
        break;
      }
      attribute(el);
    }
    el.end = pos_;
    if (el.name == "script" || el.name == "style") {
      std::string close = "</" + el.name;
      std::size_t p = pos_;
      for (;;) {
        p = s_.find("</", p);
        if (p == std::string_view::npos) fail("unterminated " + el.name, el.begin);
        if (starts_with_ci(s_, p, close) &&
            (p + close.size() >= s_.size() || is_space(s_[p + close.size()]) ||
             s_[p + close.size()] == '>' || s_[p + close.size()] == '/')) {
          break;
        }
        p += 2;
      }
      el.text_begin = pos_;
      el.text_end = p;
      pos_ = p;
      skip_end_tag();
    }
    if (el.name == "meta") {
      const HtmlAttribute* equiv = el.attribute("http-equiv");
      const HtmlAttribute* content = el.attribute("content");
      if (equiv && content && !doc_.meta_csp &&
          ascii_lower(equiv->value) == "content-security-policy") {
        doc_.meta_csp = content->value;
      }
    }
    doc_.elements.push_back(std::move(el));
  }

  void attribute(HtmlElement& el) {
    HtmlAttribute attr;
    attr.begin = pos_;
    ++pos_;  // the first character may be '='
    while (pos_ < s_.size() && !is_space(s_[pos_]) && s_[pos_] != '/' && s_[pos_] != '>' &&
           s_[pos_] != '=') {
      ++pos_;
    }
    attr.name = ascii_lower(s_.substr(attr.begin, pos_ - attr.begin));
    attr.end = pos_;
    std::size_t p = pos_;
    while (p < s_.size() && is_space(s_[p])) ++p;
    if (p < s_.size() && s_[p] == '=') {
      ++p;
      while (p < s_.size() && is_space(s_[p])) ++p;
      if (p >= s_.size()) fail("unterminated tag", el.begin);
      attr.has_value = true;
      char q = s_[p];
      if (q == '"' || q == '\'') {
        std::size_t close = s_.find(q, p + 1);
        if (close == std::string_view::npos) fail("unterminated quote", p);
        attr.value_begin = p + 1;
        attr.value_end = close;
        pos_ = close + 1;
      } else {
        attr.value_begin = p;
        while (p < s_.size() && !is_space(s_[p]) && s_[p] != '>') ++p;
        attr.value_end = p;
        pos_ = p;
      }
      attr.value =
          decode_references(s_.substr(attr.value_begin, attr.value_end - attr.value_begin));
      attr.end = pos_;
    }
    // Duplicate attributes are ignored by browsers; keep the first.
    if (!el.has(attr.name)) el.attributes.push_back(std::move(attr));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  HtmlDocument doc_;
};

}  // namespace

const HtmlAttribute* HtmlElement::attribute(std::string_view name) const {
  for (const auto& a : attributes) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

HtmlDocument parse_html(std::string_view text) { return Scanner(text).run(); }

std::string html_escape_attribute(std::string_view value) {
  std::string out;
  for (char c : value) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace waitsec
