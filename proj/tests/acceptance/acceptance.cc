// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "csp_table.h"
#include "merkle_oracle.h"
#include "wait/bundler/bundler.h"
#include "wait/core/files.h"
#include "wait/core/header.h"
#include "wait/harness/harness.h"
#include "wait/logd/service.h"
#include "wait/merklelog/log.h"
#include "wait/merklelog/merkle.h"
#include "wait/monitor/monitor.h"
#include "wait/verifier/csp.h"
#include "wait/verifier/decide.h"

using namespace waitsec;
namespace fs = std::filesystem;
namespace oracle = waitsec::testing::oracle;

namespace {

constexpr std::int64_t kNow = 1'760'000'000;

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) detail << what;
    ok = ok && cond;
  }
};

fs::path scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("wait-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

PrivateSeed seed(std::uint8_t tag) {
  PrivateSeed s{};
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<std::uint8_t>(tag * 13 + i * 3 + 7);
  return s;
}

Hash32 random_hash(std::mt19937_64& rng) {
  Bytes b(1 + rng() % 40);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return oracle::leaf(b);
}

const harness::StepResult* step(const harness::ScenarioReport& r, const std::string& name) {
  for (const auto& s : r.steps) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

void expect_step(Outcome& out, const harness::ScenarioReport& r, const std::string& name,
                 const std::string& observed) {
  const auto* s = step(r, name);
  out.expect(s != nullptr, r.name + ": missing step '" + name + "'");
  if (s) out.expect(s->observed == observed, r.name + ": '" + name + "' observed " + s->observed);
}

// A sealed demo release with its promise, served from memory.
struct Fixture {
  KeyPair developer = KeyPair::from_seed(seed(1));
  KeyPair log_key = KeyPair::from_seed(seed(2));
  SealedRelease sealed;
  InclusionPromise promise;
  ValidationConfig config;
  HttpHeaders headers;
  Bytes document;
  std::map<std::string, Bytes> files;

  Fixture() {
    auto bundle = harness::generate_demo_bundle(scratch() / "fixture");
    sealed = seal_bundle(bundle.dir, bundle.main_document, std::string(harness::kDemoUrl), developer, kNow);
    logd::LogService log(log_key, "", {}, [] { return kNow; }, merklelog::MerkleLog::in_memory());
    promise = log.handle_submit({sealed.leaf});
    config.trust_store = {LogIdentity::for_key(log_key.public_key(), "http://127.0.0.1:1")};
    headers = parse_server_config(emit_server_config({promise}, sealed.manifest.csp));
    document = to_bytes(sealed.manifest.document);
    for (const auto& r : sealed.manifest.resources) files["/" + r.path] = to_bytes(read_file(bundle.dir / r.path));
  }

  Verdict decide_with(const Bytes& doc, const HttpHeaders& hdrs, const std::map<std::string, Bytes>& served) const {
    PinStore pins;
    SubresourceFetcher fetch = [&](const Url& u) -> std::optional<Bytes> {
      auto it = served.find(u.path);
      if (u.host != harness::kDemoHost || it == served.end()) return std::nullopt;
      return it->second;
    };
    return decide(doc, hdrs, harness::kDemoUrl, pins, config, kNow + 60, fetch);
  }
};

Outcome merkle_oracle() {
  Outcome out;
  std::mt19937_64 rng(0x4d45524b);
  for (std::size_t n = 0; n <= 64 && out.ok; ++n) {
    std::vector<Hash32> leaves;
    merklelog::MerkleTree tree;
    for (std::size_t i = 0; i < n; ++i) {
      leaves.push_back(random_hash(rng));
      tree.append(leaves.back());
    }
    Hash32 root = tree.root_at(n);
    out.expect(root == oracle::mth(leaves), "root differs at n=" + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
      auto p = tree.prove_inclusion(i, n);
      out.expect(p.path == oracle::path(i, leaves) && merklelog::verify_inclusion(leaves[i], p, root),
                 "inclusion " + std::to_string(i) + "/" + std::to_string(n));
    }
    for (std::size_t m = 0; m <= n; ++m) {
      auto p = tree.prove_consistency(m, n);
      Hash32 old_root = oracle::mth(oracle::slice(leaves, 0, m));
      out.expect(p.path == oracle::consistency(m, leaves) &&
                     merklelog::verify_consistency(merklelog::TreeHead{m, old_root}, {n, root}, p),
                 "consistency " + std::to_string(m) + "->" + std::to_string(n));
    }
  }

  std::vector<Hash32> leaves;
  merklelog::MerkleTree tree;
  for (int i = 0; i < 64; ++i) {
    leaves.push_back(random_hash(rng));
    tree.append(leaves.back());
  }
  auto mutate_path = [&](std::vector<Hash32>& path) {
    switch (path.empty() ? 1 : rng() % 3) {
      case 0:
        path[rng() % path.size()][rng() % 32] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        break;
      case 1:
        path.insert(path.begin() + static_cast<std::ptrdiff_t>(rng() % (path.size() + 1)), random_hash(rng));
        break;
      default:
        path.erase(path.begin() + static_cast<std::ptrdiff_t>(rng() % path.size()));
    }
  };
  int accepted = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::uint64_t n = 2 + rng() % 63;
    merklelog::TreeHead head{n, oracle::mth(oracle::slice(leaves, 0, n))};
    bool field = rng() % 4 == 0;
    if (trial % 2 == 0) {
      std::uint64_t i = rng() % n;
      auto p = tree.prove_inclusion(i, n);
      if (field) {
        std::uint64_t j = i;
        while (j == i) j = rng() % n;
        p.leaf_index = j;
      } else {
        mutate_path(p.path);
      }
      accepted += merklelog::verify_inclusion(leaves[i], p, head);
    } else {
      std::uint64_t m = 1 + rng() % (n - 1);
      merklelog::TreeHead old{m, oracle::mth(oracle::slice(leaves, 0, m))};
      auto p = tree.prove_consistency(m, n);
      if (field) {
        std::uint64_t k = m;
        while (k == m) k = rng() % (n + 1);
        old = {k, old.root};
        p.old_size = k;
      } else {
        mutate_path(p.path);
      }
      accepted += merklelog::verify_consistency(old, head, p);
    }
  }
  out.expect(accepted == 0, std::to_string(accepted) + " of 10000 mutated proofs accepted");
  return out;
}

Outcome happy_path() {
  Outcome out;
  auto r = harness::run_scenario("happy_path", scratch());
  out.expect(r.error.empty(), "error: " + r.error);
  expect_step(out, r, "submit 1.0.0", "accepted");
  const auto* shape = step(r, "demo bundle shape");
  out.expect(shape && shape->ok, "demo bundle is not 9 resources of about 1.5 MB");
  expect_step(out, r, "verify sealed release", "ALLOW");
  expect_step(out, r, "pin created", "pinned");
  out.expect(r.passed, "scenario failed");
  return out;
}

Outcome tamper_detection(const Fixture& fx) {
  Outcome out;
  out.expect(fx.decide_with(fx.document, fx.headers, fx.files).allowed(), "untouched fixture is not ALLOWed");
  std::mt19937_64 rng(0x54414d50);
  int allows = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Bytes doc = fx.document;
    HttpHeaders headers = fx.headers;
    auto files = fx.files;
    Reason expected;
    std::string what;
    auto flip = [&](auto& bytes) {
      bytes[rng() % bytes.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    };
    switch (trial % 3) {
      case 0:
        flip(doc);
        expected = Reason::kPromiseDigestMismatch;
        what = "main document";
        break;
      case 1: {
        auto it = std::next(files.begin(), static_cast<std::ptrdiff_t>(rng() % files.size()));
        flip(it->second);
        expected = Reason::kSriMismatch;
        what = it->first;
        break;
      }
      default: {
        InclusionPromise p = fx.promise;
        expected = Reason::kPromiseBadSig;
        switch (rng() % 9) {
          case 0: flip(p.log_id); expected = Reason::kPromiseUntrustedLog; what = "log_id"; break;
          case 1: flip(p.leaf_hash); what = "leaf_hash"; break;
          case 2: {
            std::size_t from = p.app_url.rfind('/') + 1;
            std::size_t k = from + rng() % (p.app_url.rfind('.') - from);
            p.app_url[k] = p.app_url[k] == 'x' ? 'y' : 'x';
            what = "app_url";
            break;
          }
          case 3: flip(p.digest.value); what = "digest"; break;
          case 4: flip(p.developer_key); what = "developer_key"; break;
          case 5: p.issued_at ^= static_cast<std::int64_t>(1 + rng() % 255); what = "issued_at"; break;
          case 6: p.expires_at ^= static_cast<std::int64_t>(1 + rng() % 255); what = "expires_at"; break;
          case 7: p.version ^= static_cast<std::int64_t>(1 + rng() % 255); expected = Reason::kPromiseUnsupportedVersion; what = "version"; break;
          default: flip(*p.log_signature); what = "log_signature"; break;
        }
        for (auto& h : headers) {
          if (h.first == kPromiseHeader) h.second = promise_to_header({p});
        }
        break;
      }
    }
    Verdict v = fx.decide_with(doc, headers, files);
    allows += v.allowed();
    out.expect(!v.allowed() && v.has(expected), "trial " + std::to_string(trial) + " (" + what + "): " +
                                                    (v.allowed() ? "ALLOW" : "missing " + std::string(reason_name(expected))));
  }
  out.expect(allows == 0, std::to_string(allows) + " ALLOWs");
  return out;
}

Outcome downgrade() {
  Outcome out;
  auto r = harness::run_scenario("downgrade", scratch());
  out.expect(r.error.empty(), "error: " + r.error);
  expect_step(out, r, "header stripped before any visit", "ALLOW");
  expect_step(out, r, "no pin from an unprotected response", "0 pins");
  expect_step(out, r, "protected visit", "ALLOW");
  expect_step(out, r, "header stripped after a pin", "BLOCK DOWNGRADE");
  expect_step(out, r, "header stripped after restart", "BLOCK DOWNGRADE");
  out.expect(r.passed, "scenario failed");
  return out;
}

Outcome deferred_upgrade_and_replay() {
  Outcome out;
  auto d = harness::run_scenario("deferred_upgrade", scratch());
  out.expect(d.error.empty(), "error: " + d.error);
  expect_step(out, d, "v1 replayed at expires_at+600", "ALLOW");
  expect_step(out, d, "v1 replayed at expires_at+601", "BLOCK PROMISE_EXPIRED");
  expect_step(out, d, "v1 replayed an hour later", "BLOCK PROMISE_EXPIRED");
  expect_step(out, d, "v2 served", "ALLOW");
  auto r = harness::run_scenario("promise_replay", scratch());
  out.expect(r.error.empty(), "error: " + r.error);
  expect_step(out, r, "fresh renewal", "accepted");
  expect_step(out, r, "renewal replayed outside the freshness window", "ERR_STALE_TIMESTAMP");
  out.expect(d.passed && r.passed, "scenario failed");
  return out;
}

Outcome one_valid_version() {
  Outcome out;
  auto r = harness::run_scenario("rollover", scratch());
  out.expect(r.error.empty(), "error: " + r.error);
  expect_step(out, r, "v2 an hour after v1", "ERR_ACTIVE_PROMISE");
  expect_step(out, r, "v2 at the start of the tolerance window", "accepted");
  expect_step(out, r, "superseded v1 renewed", "ERR_ACTIVE_PROMISE");
  auto d = harness::run_scenario("deferred_upgrade", scratch());
  expect_step(out, d, "v2 submitted inside the tolerance window", "accepted");
  return out;
}

// Random submit / duplicate / renew schedule against an in-process log,
// polled by a monitor after every operation.
Outcome renewal_idempotence() {
  Outcome out;
  auto r = harness::run_scenario("rollover", scratch());
  out.expect(r.passed, "rollover scenario failed");

  VirtualClock clock(kNow);
  KeyPair log_key = KeyPair::from_seed(seed(3));
  logd::LogService service(log_key, "", {}, clock.as_clock(), merklelog::MerkleLog::in_memory());
  LogIdentity id = LogIdentity::for_key(log_key.public_key(), "local://log");
  Monitor monitor({}, {}, clock.as_clock(), [&](const LogIdentity&) { return logd::make_local_client(service); });
  std::vector<KeyPair> developers;
  for (std::uint8_t i = 0; i < 4; ++i) developers.push_back(KeyPair::from_seed(seed(10 + i)));

  struct Logged {
    ReleaseLeaf leaf;
    std::size_t developer;
  };
  std::vector<Logged> logged;
  std::mt19937_64 rng(0x52454e57);
  for (int op = 0; op < 300 && out.ok; ++op) {
    clock.advance(static_cast<std::int64_t>(rng() % 120));
    std::uint64_t before = service.tree_size();
    unsigned kind = logged.empty() ? 0 : rng() % 3;
    if (kind == 0) {
      std::size_t dev = rng() % developers.size();
      ReleaseLeaf leaf;
      leaf.app_url = "https://app" + std::to_string(logged.size()) + ".example/";
      leaf.developer_key = developers[dev].public_key();
      leaf.digest = digest_bytes(as_bytes("release " + std::to_string(op)));
      leaf.submitted_at = clock.now();
      sign_record(leaf, developers[dev]);
      service.handle_submit({leaf});
      logged.push_back({leaf, dev});
      out.expect(service.tree_size() == before + 1, "new release did not append");
    } else {
      const Logged& pick = logged[rng() % logged.size()];
      if (kind == 1 && clock.now() - pick.leaf.submitted_at <= service.policy().freshness_window) {
        service.handle_submit({pick.leaf});
      } else {
        RenewalRequest req{merklelog::release_leaf_hash(pick.leaf), pick.leaf.developer_key, clock.now(), {}};
        sign_record(req, developers[pick.developer]);
        service.handle_renew(req);
      }
      out.expect(service.tree_size() == before, "op " + std::to_string(op) + " changed the tree size");
    }
    monitor.poll(id);
  }
  auto state = monitor.state(id);
  out.expect(state && !state->suspect && state->history.size() >= 300, "monitor history incomplete");
  if (state) {
    for (std::size_t i = 1; i < state->history.size(); ++i) {
      out.expect(state->history[i].verified_against_prev, "head " + std::to_string(i) + " not verified");
    }
  }
  return out;
}

Outcome bench(double& median) {
  Outcome out;
  auto s = harness::bench_verify(1000, scratch());
  median = s.median_ms;
  out.expect(s.iterations == 1000, "iterations");
  out.expect(s.all_allowed, "a benchmark iteration was not ALLOWed");
  out.expect(s.fixture_bytes > 1'400'000 && s.fixture_bytes < 1'600'000, "fixture is not about 1.5 MB");
  out.expect(s.median_ms < 50.0, "median " + std::to_string(s.median_ms) + " ms");
  return out;
}

std::set<std::string> names_of(const std::vector<Finding>& findings) {
  std::set<std::string> out;
  for (const auto& f : findings) out.insert(std::string(reason_name(f.reason)));
  return out;
}

// Each policy is checked directly and end to end: a page sealed with the
// policy as its meta copy and served with it as the header.
Outcome csp_table() {
  Outcome out;
  const auto& table = waitsec::testing::csp_table();
  out.expect(table.size() >= 20, "fewer than 20 policies");
  std::set<std::string> classes;
  KeyPair dev = KeyPair::from_seed(seed(4));
  KeyPair log_key = KeyPair::from_seed(seed(5));
  logd::LogService log(log_key, "", {}, [] { return kNow; }, merklelog::MerkleLog::in_memory());
  ValidationConfig config;
  config.trust_store = {LogIdentity::for_key(log_key.public_key(), "http://127.0.0.1:1")};

  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& c = table[i];
    std::set<std::string> expected(c.expected.begin(), c.expected.end());
    classes.insert(expected.begin(), expected.end());
    out.expect(names_of(check_csp_strict(parse_csp(c.policy))) == expected, "direct: " + c.policy);
    if (c.policy.empty()) continue;

    std::string url = "https://csp.example/" + std::to_string(i) + ".html";
    std::string doc = embed_csp("<!DOCTYPE html><html><head><title>t</title></head><body><p>x</p></body></html>",
                                c.policy);
    ReleaseLeaf leaf{url, dev.public_key(), digest_bytes(as_bytes(doc)), kNow, {}};
    sign_record(leaf, dev);
    InclusionPromise p = log.handle_submit({leaf});
    HttpHeaders headers = {{std::string(kPromiseHeader), promise_to_header({p})},
                           {"Content-Security-Policy", c.policy}};
    PinStore pins;
    Verdict v = decide(as_bytes(doc), headers, url, pins, config, kNow, [](const Url&) { return std::nullopt; });
    std::vector<std::string> codes = v.codes();
    out.expect(v.allowed() == expected.empty() && std::set<std::string>(codes.begin(), codes.end()) == expected,
               "end to end: " + c.policy);
  }
  for (Reason r : all_reasons()) {
    std::string name(reason_name(r));
    bool strictness = name.rfind("CSP_", 0) == 0 && name != "CSP_MISSING" && name != "CSP_NOT_HEADER" &&
                      name != "CSP_MISMATCH";
    out.expect(!strictness || classes.count(name), "no table entry for " + name);
  }
  return out;
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const std::string& name, double limit_s, const std::function<Outcome()>& run) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail << "exception: " << e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit_s > 0 && secs >= limit_s) {
      o.ok = false;
      o.detail << " took " << secs << " s, limit " << limit_s << " s";
    }
    failed += !o.ok;
    std::printf("%s %d %s (%.2f s)%s%s\n", o.ok ? "PASS" : "FAIL", id, name.c_str(), secs,
                o.ok ? "" : ": ", o.detail.str().c_str());
    std::fflush(stdout);
  };

  report(1, "merkle-oracle-equivalence", 30, merkle_oracle);
  report(2, "end-to-end-happy-path", 10, happy_path);
  std::unique_ptr<Fixture> fx;
  report(3, "tamper-detection", 0, [&] {
    fx = std::make_unique<Fixture>();
    return tamper_detection(*fx);
  });
  report(4, "downgrade-defense", 0, downgrade);
  report(5, "deferred-upgrade-and-replay", 0, deferred_upgrade_and_replay);
  report(6, "one-valid-version", 0, one_valid_version);
  report(7, "renewal-idempotence", 0, renewal_idempotence);
  double median = 0;
  report(8, "verify-latency", 0, [&] {
    Outcome o = bench(median);
    std::printf("     median decide() %.3f ms over 1000 iterations\n", median);
    return o;
  });
  report(9, "csp-decision-table", 0, csp_table);

  fs::remove_all(scratch());
  std::printf("%d of 9 criteria failed\n", failed);
  return failed;
}
