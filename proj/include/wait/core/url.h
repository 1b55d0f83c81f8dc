#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace waitsec {

// Absolute http(s) URL split into the parts the WAIT protocol cares about.
// Scheme and host are lowercased; the port is always explicit.
struct Url {
  std::string scheme;
  std::string host;  // IPv6 literals keep their brackets
  std::uint16_t port = 0;
  std::string path = "/";
  std::string query;     // without '?'
  std::string fragment;  // without '#'

  static std::optional<Url> parse(std::string_view text);

  bool is_default_port() const;
  bool is_loopback() const;
  // scheme://host[:port]
  std::string origin() const;
  // scheme://host[:port]/path, no query or fragment
  std::string without_query() const;
  std::string to_string() const;
};

// Resolves a reference found in a document against its base URL. Supports
// absolute, scheme-relative, root-relative and relative paths (with dot
// segments). Query and fragment of the reference are kept.
std::optional<Url> resolve_url(const Url& base, std::string_view reference);

bool is_loopback_host(std::string_view host);

// App URL domain: absolute https (or http on loopback) with no query or
// fragment, already in normalized form.
bool is_valid_app_url(std::string_view text);

// Normalizes an app URL (drops query/fragment, lowercases scheme/host, drops
// default port). Returns nullopt if the URL does not parse.
std::optional<std::string> normalize_app_url(std::string_view text);

}  // namespace waitsec
