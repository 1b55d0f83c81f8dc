#include "wait/core/url.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <vector>

namespace waitsec {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::uint16_t default_port(std::string_view scheme) {
  return scheme == "https" ? 443 : 80;
}

bool valid_path_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return u > 0x20 && u < 0x7f && c != '"' && c != '<' && c != '>' &&
         c != '\\' && c != '^' && c != '`' && c != '{' && c != '|' && c != '}';
}

bool valid_host(std::string_view host) {
  if (host.empty()) return false;
  if (host.front() == '[') {
    if (host.back() != ']' || host.size() < 3) return false;
    return std::all_of(host.begin() + 1, host.end() - 1, [](char c) {
      return std::isxdigit(static_cast<unsigned char>(c)) || c == ':' || c == '.';
    });
  }
  return std::all_of(host.begin(), host.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ||
           c == '_';
  });
}

// Removes "." and ".." segments.
std::string remove_dot_segments(std::string_view path) {
  std::vector<std::string> out;
  std::size_t pos = 1;  // skip leading '/'
  bool trailing_slash = false;
  while (pos <= path.size()) {
    std::size_t next = path.find('/', pos);
    if (next == std::string_view::npos) next = path.size();
    std::string_view seg = path.substr(pos, next - pos);
    trailing_slash = false;
    if (seg == ".") {
      trailing_slash = true;
    } else if (seg == "..") {
      if (!out.empty()) out.pop_back();
      trailing_slash = true;
    } else {
      out.emplace_back(seg);
    }
    pos = next + 1;
  }
  std::string result;
  for (const auto& s : out) result += "/" + s;
  if (result.empty() || trailing_slash) result += "/";
  return result;
}

}  // namespace

bool is_loopback_host(std::string_view host) {
  std::string h = lower(host);
  if (h == "localhost" || h == "[::1]") return true;
  if (h.size() > 10 && h.ends_with(".localhost")) return true;
  // 127.0.0.0/8
  if (!h.starts_with("127.")) return false;
  int parts = 0;
  std::size_t pos = 0;
  while (pos <= h.size()) {
    std::size_t dot = h.find('.', pos);
    if (dot == std::string::npos) dot = h.size();
    std::string_view seg(h.data() + pos, dot - pos);
    int value = -1;
    auto [p, ec] = std::from_chars(seg.data(), seg.data() + seg.size(), value);
    if (seg.empty() || ec != std::errc() || p != seg.data() + seg.size() ||
        value < 0 || value > 255) {
      return false;
    }
    ++parts;
    pos = dot + 1;
  }
  return parts == 4;
}

std::optional<Url> Url::parse(std::string_view text) {
  auto colon = text.find("://");
  if (colon == std::string_view::npos) return std::nullopt;
  Url url;
  url.scheme = lower(text.substr(0, colon));
  if (url.scheme != "https" && url.scheme != "http") return std::nullopt;

  std::string_view rest = text.substr(colon + 3);
  std::size_t auth_end = rest.find_first_of("/?#");
  std::string_view authority = rest.substr(0, auth_end);
  rest = auth_end == std::string_view::npos ? std::string_view{} : rest.substr(auth_end);
  if (authority.find('@') != std::string_view::npos) return std::nullopt;

  std::string_view host = authority;
  std::string_view port;
  if (!authority.empty() && authority.front() == '[') {
    auto close = authority.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    host = authority.substr(0, close + 1);
    std::string_view after = authority.substr(close + 1);
    if (!after.empty()) {
      if (after.front() != ':') return std::nullopt;
      port = after.substr(1);
    }
  } else if (auto pc = authority.rfind(':'); pc != std::string_view::npos) {
    host = authority.substr(0, pc);
    port = authority.substr(pc + 1);
  }
  if (!valid_host(host)) return std::nullopt;
  url.host = lower(host);
  url.port = default_port(url.scheme);
  if (!port.empty()) {
    unsigned value = 0;
    auto [p, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
    if (ec != std::errc() || p != port.data() + port.size() || value == 0 ||
        value > 65535) {
      return std::nullopt;
    }
    url.port = static_cast<std::uint16_t>(value);
  }

  std::size_t frag = rest.find('#');
  if (frag != std::string_view::npos) {
    url.fragment = std::string(rest.substr(frag + 1));
    rest = rest.substr(0, frag);
  }
  std::size_t q = rest.find('?');
  if (q != std::string_view::npos) {
    url.query = std::string(rest.substr(q + 1));
    rest = rest.substr(0, q);
  }
  if (!std::all_of(rest.begin(), rest.end(), valid_path_char)) return std::nullopt;
  url.path = rest.empty() ? "/" : remove_dot_segments(rest);
  return url;
}

bool Url::is_default_port() const { return port == default_port(scheme); }

bool Url::is_loopback() const { return is_loopback_host(host); }

std::string Url::origin() const {
  std::string out = scheme + "://" + host;
  if (!is_default_port()) out += ":" + std::to_string(port);
  return out;
}

std::string Url::without_query() const { return origin() + path; }

std::string Url::to_string() const {
  std::string out = without_query();
  if (!query.empty()) out += "?" + query;
  if (!fragment.empty()) out += "#" + fragment;
  return out;
}

std::optional<Url> resolve_url(const Url& base, std::string_view reference) {
  // A reference with its own scheme is absolute. Only http(s) is supported.
  std::size_t colon = reference.find(':');
  std::size_t first_delim = reference.find_first_of("/?#");
  if (colon != std::string_view::npos && colon < first_delim && colon > 0 &&
      std::isalpha(static_cast<unsigned char>(reference[0]))) {
    return Url::parse(reference);
  }
  if (reference.starts_with("//")) {
    return Url::parse(base.scheme + ":" + std::string(reference));
  }
  std::string ref(reference);
  std::string suffix;
  if (auto cut = ref.find_first_of("?#"); cut != std::string::npos) {
    suffix = ref.substr(cut);
    ref = ref.substr(0, cut);
  }
  std::string path;
  if (ref.empty()) {
    path = base.path;
  } else if (ref.front() == '/') {
    path = ref;
  } else {
    path = base.path.substr(0, base.path.rfind('/') + 1) + ref;
  }
  return Url::parse(base.origin() + path + suffix);
}

std::optional<std::string> normalize_app_url(std::string_view text) {
  auto url = Url::parse(text);
  if (!url) return std::nullopt;
  return url->without_query();
}

bool is_valid_app_url(std::string_view text) {
  auto url = Url::parse(text);
  if (!url || !url->query.empty() || !url->fragment.empty()) return false;
  if (text.find_first_of("?#") != std::string_view::npos) return false;
  if (url->scheme == "http" && !url->is_loopback()) return false;
  return url->without_query() == text;
}

}  // namespace waitsec
