#include "wait/bundler/bundler.h"

#include <algorithm>
#include <future>
#include <set>

#include "wait/core/files.h"
#include "wait/core/header.h"
#include "wait/core/url.h"
#include "wait/merklelog/log.h"
#include "wait/verifier/html.h"

namespace waitsec {
namespace fs = std::filesystem;
namespace {

constexpr std::string_view kBundleOrigin = "https://bundle.invalid/";

struct Reference {
  const HtmlElement* element;
  const HtmlAttribute* attribute;
  ResourceKind kind;
};

bool has_token(std::string_view list, std::string_view token) {
  for (const auto& t : split_whitespace(list)) {
    if (ascii_lower(t) == token) return true;
  }
  return false;
}

std::vector<Reference> references(const HtmlDocument& doc) {
  std::vector<Reference> out;
  for (const auto& el : doc.elements) {
    if (el.name == "script") {
      if (const auto* src = el.attribute("src")) out.push_back({&el, src, ResourceKind::kScript});
    } else if (el.name == "link") {
      const auto* rel = el.attribute("rel");
      const auto* href = el.attribute("href");
      if (rel && href && has_token(rel->value, "stylesheet")) {
        out.push_back({&el, href, ResourceKind::kStylesheet});
      }
    }
  }
  return out;
}

struct Target {
  bool cross_origin = false;
  std::string path;  // bundle path or absolute URL
};

Target locate(const fs::path& root, const std::string& main_document, const std::string& reference) {
  auto base = Url::parse(std::string(kBundleOrigin) + main_document);
  auto url = base ? resolve_url(*base, reference) : std::nullopt;
  if (!url) throw Error(ErrorCode::kExternalDynamic, "unresolvable reference " + reference);
  if (url->origin() + "/" != kBundleOrigin) {
    if (url->scheme != "https") {
      throw Error(ErrorCode::kExternalDynamic, "reference is not https: " + reference);
    }
    return {true, url->without_query()};
  }
  std::string rel = url->path.substr(1);
  fs::path file = root / rel;
  std::error_code ec;
  if (rel.empty() || rel.find("..") != std::string::npos || !fs::is_regular_file(file, ec)) {
    throw Error(ErrorCode::kExternalDynamic, "reference not in bundle: " + reference);
  }
  return {false, rel};
}

struct Edit {
  std::size_t pos;
  std::size_t len;
  std::string text;
};

std::string apply_edits(std::string_view text, std::vector<Edit> edits) {
  std::stable_sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) { return a.pos < b.pos; });
  std::string out;
  std::size_t cursor = 0;
  for (const auto& e : edits) {
    out.append(text.substr(cursor, e.pos - cursor));
    out += e.text;
    cursor = e.pos + e.len;
  }
  out.append(text.substr(cursor));
  return out;
}

void set_attribute(const HtmlElement& el, std::string_view name, const std::string& value,
                   std::vector<Edit>& edits, std::string& appended) {
  std::string rendered = std::string(name) + "=\"" + html_escape_attribute(value) + "\"";
  if (const auto* attr = el.attribute(name)) {
    if (attr->has_value && attr->value == value) return;
    edits.push_back({attr->begin, attr->end - attr->begin, rendered});
  } else {
    appended += " " + rendered;
  }
}

// Replaces every meta element selected by `match` with `tag`, keeping an
// existing identical one, or inserts `tag` right after <head>.
std::string place_meta(std::string_view document, const std::string& tag,
                       const std::function<bool(const HtmlElement&)>& match,
                       const std::function<bool(const HtmlElement&)>& current) {
  HtmlDocument doc = parse_html(document);
  std::vector<Edit> edits;
  bool kept = false;
  for (const auto& el : doc.elements) {
    if (el.name != "meta" || !match(el)) continue;
    if (!kept && current(el)) {
      kept = true;
      continue;
    }
    edits.push_back({el.begin, el.end - el.begin, ""});
  }
  if (!kept) {
    bool replaced = false;
    for (auto& e : edits) {
      if (!replaced) {
        e.text = tag;
        replaced = true;
      }
    }
    if (!replaced) {
      auto head = std::find_if(doc.elements.begin(), doc.elements.end(),
                               [](const HtmlElement& el) { return el.name == "head"; });
      if (head == doc.elements.end()) throw Error(ErrorCode::kParse, "document has no head element");
      edits.push_back({head->end, 0, tag});
    }
  }
  return apply_edits(document, std::move(edits));
}

std::string attr_value(const HtmlElement& el, std::string_view name) {
  const auto* a = el.attribute(name);
  return a ? a->value : std::string();
}

}  // namespace

BundleManifest scan_bundle(const fs::path& directory, const std::string& main_document) {
  BundleManifest m;
  m.root = directory;
  m.main_document = main_document;
  m.document = read_file(directory / main_document);
  HtmlDocument doc = parse_html(m.document);

  CoverageResult coverage = check_document_coverage(as_bytes(m.document));
  for (const auto& f : coverage.findings) {
    switch (f.reason) {
      case Reason::kDocInlineScript:
      case Reason::kDocInlineStyle:
      case Reason::kDocEventHandler:
      case Reason::kDocJavascriptUrl:
      case Reason::kDocBadReference:
        m.violations.push_back(f);
        break;
      default:
        break;
    }
  }

  std::set<std::string> seen;
  for (const auto& ref : references(doc)) {
    if (split_whitespace(ref.attribute->value).empty()) continue;
    Target target = locate(directory, main_document, ref.attribute->value);
    if (!seen.insert(target.path).second) continue;
    ResourceEntry entry;
    entry.path = target.path;
    entry.kind = ref.kind;
    entry.cross_origin = target.cross_origin;
    if (target.cross_origin) {
      const auto* integrity = ref.element->attribute("integrity");
      if (!integrity) {
        m.violations.push_back({Reason::kDocMissingSri, "cross-origin " + target.path});
      } else {
        try {
          parse_sri(integrity->value);
          entry.sri = integrity->value;
        } catch (const Error&) {
          m.violations.push_back({Reason::kSriSyntax, "cross-origin " + target.path});
        }
      }
    } else {
      std::string content = read_file(directory / target.path);
      entry.size = content.size();
      entry.sri = compute_sri(as_bytes(content));
    }
    m.resources.push_back(std::move(entry));
  }
  return m;
}

std::string inject_integrity(const BundleManifest& manifest) {
  HtmlDocument doc = parse_html(manifest.document);
  std::vector<Edit> edits;
  for (const auto& ref : references(doc)) {
    if (split_whitespace(ref.attribute->value).empty()) continue;
    Target target = locate(manifest.root, manifest.main_document, ref.attribute->value);
    auto entry = std::find_if(manifest.resources.begin(), manifest.resources.end(),
                              [&](const ResourceEntry& e) { return e.path == target.path; });
    if (entry == manifest.resources.end() || entry->sri.empty()) continue;
    std::string appended;
    set_attribute(*ref.element, "integrity", entry->sri, edits, appended);
    set_attribute(*ref.element, "crossorigin", "anonymous", edits, appended);
    if (!appended.empty()) edits.push_back({ref.element->insert_at, 0, appended});
  }
  return apply_edits(manifest.document, std::move(edits));
}

std::string emit_csp(const BundleManifest& manifest) {
  std::set<std::string> script_origins;
  std::set<std::string> style_origins;
  for (const auto& r : manifest.resources) {
    if (!r.cross_origin) continue;
    auto url = Url::parse(r.path);
    if (!url) continue;
    (r.kind == ResourceKind::kStylesheet ? style_origins : script_origins).insert(url->origin());
  }
  auto join = [](const std::set<std::string>& origins) {
    std::string out;
    for (const auto& o : origins) out += " " + o;
    return out;
  };
  return "default-src 'self'; script-src 'self'" + join(script_origins) + "; style-src 'self'" +
         join(style_origins) + "; object-src 'none'; base-uri 'none'";
}

std::string embed_developer_key(std::string_view document, const PublicKey& key) {
  std::string content = "ed25519:" + base64url_encode(key);
  std::string tag = "<meta name=\"" + std::string(kDeveloperKeyMeta) + "\" content=\"" + content + "\">";
  return place_meta(
      document, tag,
      [](const HtmlElement& el) { return ascii_lower(attr_value(el, "name")) == kDeveloperKeyMeta; },
      [&](const HtmlElement& el) { return attr_value(el, "content") == content; });
}

std::string embed_csp(std::string_view document, std::string_view policy) {
  std::string tag = "<meta http-equiv=\"Content-Security-Policy\" content=\"" +
                    html_escape_attribute(policy) + "\">";
  return place_meta(
      document, tag,
      [](const HtmlElement& el) {
        return ascii_lower(attr_value(el, "http-equiv")) == "content-security-policy";
      },
      [&](const HtmlElement& el) { return attr_value(el, "content") == policy; });
}

ReleaseLeaf finalize_release(BundleManifest& manifest, std::string document,
                             const std::string& app_url, const KeyPair& key, std::int64_t now) {
  if (!is_valid_app_url(app_url)) throw Error(ErrorCode::kUrl, "invalid app URL " + app_url);
  manifest.document = std::move(document);
  ReleaseLeaf leaf;
  leaf.app_url = app_url;
  leaf.digest = digest_bytes(as_bytes(manifest.document));
  leaf.submitted_at = now;
  sign_record(leaf, key);
  manifest.developer_key = key.public_key();
  manifest.release_digest = leaf.digest;
  return leaf;
}

SealedRelease seal_bundle(const fs::path& directory, const std::string& main_document,
                          const std::string& app_url, const KeyPair& key, std::int64_t now) {
  BundleManifest m = scan_bundle(directory, main_document);
  if (!m.violations.empty()) {
    std::string list;
    for (const auto& v : m.violations) list += "\n  " + std::string(reason_name(v.reason)) + " " + v.detail;
    throw Error(ErrorCode::kParse, "scan reported violations:" + list);
  }
  std::string doc = inject_integrity(m);
  m.csp = emit_csp(m);
  doc = embed_csp(doc, m.csp);
  doc = embed_developer_key(doc, key.public_key());
  ReleaseLeaf leaf = finalize_release(m, std::move(doc), app_url, key, now);
  return {std::move(m), std::move(leaf)};
}

nlohmann::json manifest_to_json(const BundleManifest& m) {
  nlohmann::json resources = nlohmann::json::array();
  for (const auto& r : m.resources) {
    resources.push_back({{"path", r.path},
                         {"kind", std::string(resource_kind_name(r.kind))},
                         {"size", r.size},
                         {"sri", r.sri},
                         {"cross_origin", r.cross_origin}});
  }
  nlohmann::json j = {{"main_document", m.main_document},
                      {"resources", resources},
                      {"csp", m.csp},
                      {"digest_algorithm", "sha256"},
                      {"sri_algorithm", "sha384"}};
  if (m.developer_key) j["developer_key"] = "ed25519:" + base64url_encode(*m.developer_key);
  if (m.release_digest) j["release_digest"] = m.release_digest->to_string();
  return j;
}

void write_sealed_bundle(const SealedRelease& sealed, const fs::path& out) {
  const BundleManifest& m = sealed.manifest;
  fs::path site = out / "site";
  std::error_code ec;
  fs::create_directories(site, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + site.string() + ": " + ec.message());
  fs::path root = fs::weakly_canonical(m.root);
  fs::path out_canon = fs::weakly_canonical(out);
  for (const auto& entry : fs::recursive_directory_iterator(m.root)) {
    if (!entry.is_regular_file()) continue;
    fs::path canon = fs::weakly_canonical(entry.path());
    auto [a, b] = std::mismatch(out_canon.begin(), out_canon.end(), canon.begin(), canon.end());
    if (a == out_canon.end()) continue;
    fs::path rel = fs::relative(entry.path(), m.root);
    fs::create_directories((site / rel).parent_path(), ec);
    fs::copy_file(entry.path(), site / rel, fs::copy_options::overwrite_existing, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot copy " + rel.string() + ": " + ec.message());
  }
  write_file_atomic(site / m.main_document, m.document);
  write_file_atomic(out / "release.json", to_string(canonical_encode(sealed.leaf)));
  write_file_atomic(out / "csp.txt", m.csp);
  write_file_atomic(out / "manifest.json", to_string(canonical_bytes(manifest_to_json(m))));
}

namespace {

using Call = std::function<InclusionPromise(logd::LogApi&)>;
using Check = std::function<std::string(const InclusionPromise&)>;

std::vector<LogOutcome> fan_out(const std::vector<LogIdentity>& logs, const LogClientFactory& clients,
                                const Call& call, const Check& check) {
  std::vector<std::future<LogOutcome>> pending;
  for (const auto& log : logs) {
    pending.push_back(std::async(std::launch::async, [&, log] {
      LogOutcome out;
      out.log = log;
      try {
        auto client = clients(log);
        InclusionPromise p = call(*client);
        std::string problem;
        if (p.log_id != log.log_id) {
          problem = "promise names another log";
        } else if (!verify_record(p, log.public_key)) {
          problem = "promise signature does not verify";
        } else {
          problem = check(p);
        }
        if (problem.empty()) {
          out.promise = std::move(p);
        } else {
          out.error = ErrorCode::kLogRejected;
          out.message = problem;
        }
      } catch (const Error& e) {
        out.error = e.code() == ErrorCode::kNetwork ? ErrorCode::kNetwork : ErrorCode::kLogRejected;
        if (e.code() != ErrorCode::kNetwork) out.log_code = e.code();
        out.message = e.what();
      } catch (const std::exception& e) {
        out.error = ErrorCode::kNetwork;
        out.message = e.what();
      }
      return out;
    }));
  }
  std::vector<LogOutcome> results;
  for (auto& f : pending) results.push_back(f.get());
  return results;
}

}  // namespace

std::vector<LogOutcome> submit_release(const ReleaseLeaf& leaf, const std::vector<LogIdentity>& logs,
                                       const LogClientFactory& clients) {
  Hash32 hash = merklelog::release_leaf_hash(leaf);
  return fan_out(
      logs, clients, [&](logd::LogApi& api) { return api.submit(leaf); },
      [&](const InclusionPromise& p) -> std::string {
        if (p.leaf_hash != hash || p.digest != leaf.digest || p.app_url != leaf.app_url ||
            p.developer_key != leaf.developer_key) {
          return "promise does not match the submitted leaf";
        }
        return {};
      });
}

std::vector<LogOutcome> renew_promise(const Hash32& leaf_hash, const KeyPair& key,
                                      const std::vector<LogIdentity>& logs, std::int64_t now,
                                      const LogClientFactory& clients) {
  RenewalRequest request;
  request.leaf_hash = leaf_hash;
  request.renewed_at = now;
  sign_record(request, key);
  return fan_out(
      logs, clients, [&](logd::LogApi& api) { return api.renew(request); },
      [&](const InclusionPromise& p) -> std::string {
        if (p.leaf_hash != leaf_hash || p.developer_key != key.public_key()) {
          return "promise does not match the renewed leaf";
        }
        return {};
      });
}

std::string emit_server_config(const std::vector<InclusionPromise>& promises,
                               const std::optional<std::string>& csp) {
  std::string out = "add_header " + std::string(kPromiseHeader) + " \"" + promise_to_header(promises) +
                    "\" always;\n";
  if (csp) out += "add_header Content-Security-Policy \"" + *csp + "\" always;\n";
  return out;
}

HttpHeaders parse_server_config(std::string_view text) {
  HttpHeaders headers;
  std::size_t start = 0;
  int line_no = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty() || line.front() == '#') continue;
    auto fail = [&] { throw Error(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": expected add_header"); };
    constexpr std::string_view kDirective = "add_header ";
    if (!line.starts_with(kDirective) || !line.ends_with(";")) fail();
    line.remove_prefix(kDirective.size());
    line.remove_suffix(1);
    std::size_t sp = line.find(' ');
    if (sp == std::string_view::npos) fail();
    std::string name(line.substr(0, sp));
    std::string_view rest = line.substr(sp + 1);
    if (rest.ends_with(" always")) rest.remove_suffix(7);
    if (rest.size() < 2 || rest.front() != '"' || rest.back() != '"') fail();
    headers.emplace_back(name, std::string(rest.substr(1, rest.size() - 2)));
  }
  return headers;
}

}  // namespace waitsec
