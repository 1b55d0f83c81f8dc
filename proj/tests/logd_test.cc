#include <gtest/gtest.h>
#include <httplib.h>

#include <filesystem>
#include <random>
#include <thread>

#include "test_util.h"
#include "wait/core/error.h"
#include "wait/logd/client.h"
#include "wait/logd/config.h"
#include "wait/logd/http_server.h"
#include "wait/logd/service.h"

namespace waitsec::logd {
namespace {

namespace fs = std::filesystem;
using merklelog::MerkleLog;
using testing::make_leaf;
using testing::test_key;

constexpr std::int64_t kStart = 1'700'000'000;
constexpr const char* kUrl = "https://notes.example/index.html";

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kSetup;
}

class LogServiceTest : public ::testing::Test {
 protected:
  void SetUp() override { reset(); }

  void reset(LogPolicy policy = {}) {
    clock.set(kStart);
    service = std::make_unique<LogService>(log_key, "http://127.0.0.1:1", policy,
                                           clock.as_clock(), MerkleLog::in_memory());
  }

  ReleaseLeaf leaf(std::string_view doc, std::int64_t at) { return make_leaf(dev, kUrl, doc, at); }

  RenewalRequest renewal(const Hash32& h, std::int64_t at) {
    RenewalRequest r;
    r.leaf_hash = h;
    r.renewed_at = at;
    sign_record(r, dev);
    return r;
  }

  VirtualClock clock;
  KeyPair log_key = test_key(100);
  KeyPair dev = test_key(1);
  std::unique_ptr<LogService> service;
};

TEST_F(LogServiceTest, FirstSubmissionIssuesPromise) {
  ReleaseLeaf l = leaf("v1", kStart);
  InclusionPromise p = service->handle_submit({l});
  EXPECT_EQ(service->tree_size(), 1u);
  EXPECT_TRUE(verify_record(p, log_key.public_key()));
  EXPECT_EQ(p.log_id, service->identity().log_id);
  EXPECT_EQ(p.leaf_hash, merklelog::release_leaf_hash(l));
  EXPECT_EQ(p.digest, l.digest);
  EXPECT_EQ(p.app_url, l.app_url);
  EXPECT_EQ(p.issued_at, kStart);
  EXPECT_EQ(p.expires_at, kStart + 604800);
  auto rec = service->log().find_leaf(p.leaf_hash);
  ASSERT_TRUE(rec);
  EXPECT_EQ(rec->leaf, l);
}

TEST_F(LogServiceTest, NewDigestBeforeExpiryIsActivePromise) {
  service->handle_submit({leaf("v1", kStart)});
  clock.advance(3600);
  auto size = service->tree_size();
  auto journal = service->issuance_journal().size();
  EXPECT_EQ(code_of([&] { service->handle_submit({leaf("v2", clock.now())}); }),
            ErrorCode::kActivePromise);
  EXPECT_EQ(service->tree_size(), size);
  EXPECT_EQ(service->issuance_journal().size(), journal);
}

TEST_F(LogServiceTest, RolloverBoundaryMatchesIndependentPredicate) {
  const std::int64_t validity = 604800;
  const std::int64_t tolerance = 600;
  const std::int64_t expiry = kStart + validity;
  // Independently stated rule: a new digest is refused while more than the
  // tolerance remains before the active promise expires.
  auto should_accept = [&](std::int64_t t) { return t >= expiry - tolerance; };
  for (std::int64_t t : {expiry - 3600, expiry - tolerance - 2, expiry - tolerance - 1,
                         expiry - tolerance, expiry - tolerance + 1, expiry - 300,
                         expiry - 1, expiry, expiry + 1, expiry + 5000}) {
    reset();
    service->handle_submit({leaf("v1", kStart)});
    clock.set(t);
    bool accepted = true;
    try {
      service->handle_submit({leaf("v2", t)});
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kActivePromise);
      accepted = false;
    }
    EXPECT_EQ(accepted, should_accept(t)) << "t = expiry " << (t - expiry);
  }
}

TEST_F(LogServiceTest, SingleActiveCanBeDisabled) {
  LogPolicy policy;
  policy.enforce_single_active = false;
  reset(policy);
  service->handle_submit({leaf("v1", kStart)});
  clock.advance(60);
  EXPECT_NO_THROW(service->handle_submit({leaf("v2", clock.now())}));
  EXPECT_EQ(service->tree_size(), 2u);
}

TEST_F(LogServiceTest, SingleActiveIsScopedToDeveloperAndUrl) {
  service->handle_submit({leaf("v1", kStart)});
  EXPECT_NO_THROW(service->handle_submit(
      {make_leaf(dev, "https://notes.example/other.html", "v2", kStart)}));
  EXPECT_NO_THROW(service->handle_submit({make_leaf(test_key(2), kUrl, "v3", kStart)}));
}

TEST_F(LogServiceTest, BadSignatureRejected) {
  ReleaseLeaf l = leaf("v1", kStart);
  l.digest = digest_bytes(as_bytes("swapped"));
  EXPECT_EQ(code_of([&] { service->handle_submit({l}); }), ErrorCode::kBadSignature);
  EXPECT_EQ(service->tree_size(), 0u);
}

TEST_F(LogServiceTest, StaleSubmissionRejected) {
  EXPECT_EQ(code_of([&] { service->handle_submit({leaf("v1", kStart - 301)}); }),
            ErrorCode::kStaleTimestamp);
  EXPECT_EQ(code_of([&] { service->handle_submit({leaf("v1", kStart + 301)}); }),
            ErrorCode::kStaleTimestamp);
  EXPECT_NO_THROW(service->handle_submit({leaf("v1", kStart - 300)}));
}

TEST_F(LogServiceTest, IdenticalResubmitDoesNotGrowTree) {
  ReleaseLeaf l = leaf("v1", kStart);
  InclusionPromise first = service->handle_submit({l});
  clock.advance(30);
  InclusionPromise second = service->handle_submit({l});
  EXPECT_EQ(service->tree_size(), 1u);
  EXPECT_EQ(second.leaf_hash, first.leaf_hash);
  EXPECT_GT(second.expires_at, first.expires_at);
}

TEST_F(LogServiceTest, RenewRightAfterSubmit) {
  InclusionPromise first = service->handle_submit({leaf("v1", kStart)});
  clock.advance(1);
  InclusionPromise renewed = service->handle_renew(renewal(first.leaf_hash, clock.now()));
  EXPECT_EQ(service->tree_size(), 1u);
  EXPECT_GT(renewed.expires_at, first.expires_at);
  EXPECT_EQ(renewed.digest, first.digest);
  EXPECT_EQ(renewed.app_url, first.app_url);
  EXPECT_TRUE(verify_record(renewed, log_key.public_key()));
}

TEST_F(LogServiceTest, StaleRenewalRejected) {
  InclusionPromise first = service->handle_submit({leaf("v1", kStart)});
  clock.advance(3600);
  EXPECT_EQ(code_of([&] { service->handle_renew(renewal(first.leaf_hash, kStart)); }),
            ErrorCode::kStaleTimestamp);
}

TEST_F(LogServiceTest, ReplayedRenewalBytesRejected) {
  InclusionPromise first = service->handle_submit({leaf("v1", kStart)});
  Bytes wire = canonical_encode(renewal(first.leaf_hash, kStart));
  EXPECT_NO_THROW(service->handle_renew(decode_renewal_request(wire)));
  clock.advance(600);
  EXPECT_EQ(code_of([&] { service->handle_renew(decode_renewal_request(wire)); }),
            ErrorCode::kStaleTimestamp);
}

TEST_F(LogServiceTest, RenewalErrors) {
  InclusionPromise first = service->handle_submit({leaf("v1", kStart)});
  EXPECT_EQ(code_of([&] { service->handle_renew(renewal(sha256(as_bytes("x")), kStart)); }),
            ErrorCode::kUnknownLeaf);
  RenewalRequest other;
  other.leaf_hash = first.leaf_hash;
  other.renewed_at = kStart;
  sign_record(other, test_key(9));
  EXPECT_EQ(code_of([&] { service->handle_renew(other); }), ErrorCode::kBadSignature);
  RenewalRequest tampered = renewal(first.leaf_hash, kStart);
  tampered.renewed_at += 1;
  EXPECT_EQ(code_of([&] { service->handle_renew(tampered); }), ErrorCode::kBadSignature);
}

TEST_F(LogServiceTest, RenewingSupersededReleaseIsRefused) {
  InclusionPromise v1 = service->handle_submit({leaf("v1", kStart)});
  clock.set(v1.expires_at - 300);
  service->handle_submit({leaf("v2", clock.now())});
  clock.advance(10);
  EXPECT_EQ(code_of([&] { service->handle_renew(renewal(v1.leaf_hash, clock.now())); }),
            ErrorCode::kActivePromise);
}

TEST_F(LogServiceTest, SignedTreeHeads) {
  SignedTreeHead empty = service->handle_sth();
  EXPECT_EQ(empty.tree_size, 0u);
  EXPECT_EQ(empty.root_hash, merklelog::empty_root());
  EXPECT_TRUE(verify_record(empty, log_key.public_key()));

  SignedTreeHead prev = empty;
  for (int k = 1; k <= 6; ++k) {
    clock.advance(5);
    service->handle_submit({make_leaf(dev, "https://notes.example/p" + std::to_string(k),
                                      "d", clock.now())});
    SignedTreeHead sth = service->handle_sth();
    EXPECT_EQ(sth.tree_size, static_cast<std::uint64_t>(k));
    EXPECT_EQ(sth.root_hash, service->log().root_at(k));
    EXPECT_TRUE(verify_record(sth, log_key.public_key()));
    auto proof = service->handle_consistency(prev.tree_size, sth.tree_size);
    EXPECT_TRUE(merklelog::verify_consistency({prev.tree_size, prev.root_hash},
                                              {sth.tree_size, sth.root_hash}, proof));
    prev = sth;
  }
}

TEST_F(LogServiceTest, InclusionProofAndEntries) {
  InclusionPromise p = service->handle_submit({leaf("v1", kStart)});
  auto proof = service->handle_inclusion_proof(p.leaf_hash, 1);
  EXPECT_TRUE(proof.path.empty());
  EXPECT_EQ(proof.leaf_index, 0u);
  EXPECT_EQ(code_of([&] { service->handle_inclusion_proof(sha256(as_bytes("?")), 1); }),
            ErrorCode::kUnknownLeaf);
  EXPECT_EQ(code_of([&] { service->handle_inclusion_proof(p.leaf_hash, 2); }),
            ErrorCode::kRange);

  std::vector<ReleaseLeaf> submitted{service->log().entries(0, 1)[0].leaf};
  for (int i = 0; i < 4; ++i) {
    submitted.push_back(make_leaf(dev, "https://notes.example/e" + std::to_string(i), "d", kStart));
    service->handle_submit({submitted.back()});
  }
  auto entries = service->handle_entries(0, service->tree_size());
  ASSERT_EQ(entries.size(), submitted.size());
  for (std::size_t i = 0; i < entries.size(); ++i) EXPECT_EQ(entries[i].leaf, submitted[i]);
  EXPECT_EQ(code_of([&] { service->handle_entries(2, 99); }), ErrorCode::kRange);
}

TEST_F(LogServiceTest, EntriesAreCappedPerRequest) {
  LogPolicy policy;
  policy.enforce_single_active = false;
  reset(policy);
  for (int i = 0; i < 1030; ++i) {
    service->handle_submit({leaf("v" + std::to_string(i), kStart)});
  }
  auto page = service->handle_entries(0, 1030);
  EXPECT_EQ(page.size(), kMaxEntriesPerRequest);
  EXPECT_EQ(service->handle_entries(1024, 1030).size(), 6u);
}

TEST_F(LogServiceTest, ConcurrentDuplicateSubmissionsAppendOnce) {
  ReleaseLeaf l = leaf("v1", kStart);
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      for (int k = 0; k < 10; ++k) {
        service->handle_submit({l});
        ++ok;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 80);
  EXPECT_EQ(service->tree_size(), 1u);
}

TEST_F(LogServiceTest, JournalReplayShowsOneActiveVersion) {
  // Random schedule of submissions and renewals for one (developer, URL).
  std::mt19937_64 rng(17);
  LogPolicy policy;
  policy.promise_validity = 3600;
  policy.clock_tolerance = 120;
  reset(policy);
  std::vector<Hash32> hashes;
  for (int step = 0; step < 300; ++step) {
    clock.advance(static_cast<std::int64_t>(rng() % 400));
    try {
      if (hashes.empty() || rng() % 3 == 0) {
        auto p = service->handle_submit({leaf("v" + std::to_string(step), clock.now())});
        hashes.push_back(p.leaf_hash);
      } else {
        service->handle_renew(renewal(hashes[rng() % hashes.size()], clock.now()));
      }
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kActivePromise);
    }
  }
  auto journal = service->issuance_journal();
  ASSERT_GT(journal.size(), 20u);
  for (std::size_t i = 0; i < journal.size(); ++i) {
    for (std::size_t j = i + 1; j < journal.size(); ++j) {
      if (journal[i].digest == journal[j].digest) continue;
      // A later promise for another digest only appears within the
      // tolerance before the earlier one runs out.
      EXPECT_GE(journal[j].issued_at, journal[i].expires_at - policy.clock_tolerance);
    }
  }
}

TEST(LogServicePersistenceTest, RestartKeepsLogAndActivePromises) {
  fs::path dir = fs::temp_directory_path() / ("wait-logd-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  VirtualClock clock(kStart);
  KeyPair log_key = test_key(100);
  KeyPair dev = test_key(1);
  {
    auto service = LogService::open(log_key, "http://x", {}, clock.as_clock(), dir);
    service->handle_submit({make_leaf(dev, kUrl, "v1", kStart)});
  }
  auto service = LogService::open(log_key, "http://x", {}, clock.as_clock(), dir);
  EXPECT_EQ(service->tree_size(), 1u);
  EXPECT_EQ(service->issuance_journal().size(), 1u);
  clock.advance(60);
  EXPECT_EQ(code_of([&] { service->handle_submit({make_leaf(dev, kUrl, "v2", clock.now())}); }),
            ErrorCode::kActivePromise);
  fs::remove_all(dir);
}

TEST(LogPolicyTest, Validation) {
  LogPolicy p;
  EXPECT_NO_THROW(p.validate());
  p.clock_tolerance = p.promise_validity;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.freshness_window = 0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(LogdConfigTest, ParsesKeyValueFile) {
  auto cfg = parse_logd_config(R"(
# test config
listen = 0.0.0.0:9000
key_file = keys/log.json
data_dir = /var/lib/wait
promise_validity = 86400
clock_tolerance = 60   # one minute
freshness_window = 120
enforce_single_active = false
)",
                               "/etc/wait");
  EXPECT_EQ(cfg.listen_host, "0.0.0.0");
  EXPECT_EQ(cfg.listen_port, 9000);
  EXPECT_EQ(cfg.base_url, "http://0.0.0.0:9000");
  EXPECT_EQ(cfg.key_file, fs::path("/etc/wait/keys/log.json"));
  EXPECT_EQ(cfg.data_dir, fs::path("/var/lib/wait"));
  EXPECT_EQ(cfg.policy.promise_validity, 86400);
  EXPECT_EQ(cfg.policy.clock_tolerance, 60);
  EXPECT_EQ(cfg.policy.freshness_window, 120);
  EXPECT_FALSE(cfg.policy.enforce_single_active);

  EXPECT_EQ(code_of([] { parse_logd_config("bogus = 1"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { parse_logd_config("clock_tolerance = x"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { parse_logd_config("clock_tolerance = 999999999"); }),
            ErrorCode::kConfig);
}

class LogHttpTest : public LogServiceTest {
 protected:
  void SetUp() override {
    LogServiceTest::SetUp();
    server = std::make_unique<LogHttpServer>(*service);
    port = server->start("127.0.0.1", 0);
    client = make_http_client("http://127.0.0.1:" + std::to_string(port));
  }
  void TearDown() override { server->stop(); }

  std::unique_ptr<LogHttpServer> server;
  std::unique_ptr<LogApi> client;
  int port = 0;
};

TEST_F(LogHttpTest, SubmitAndErrorsOverHttp) {
  InclusionPromise p = client->submit(leaf("v1", kStart));
  EXPECT_TRUE(verify_record(p, log_key.public_key()));
  clock.advance(60);
  EXPECT_EQ(code_of([&] { client->submit(leaf("v2", clock.now())); }), ErrorCode::kActivePromise);
  EXPECT_EQ(code_of([&] { client->renew(renewal(sha256(as_bytes("?")), clock.now())); }),
            ErrorCode::kUnknownLeaf);
  InclusionPromise renewed = client->renew(renewal(p.leaf_hash, clock.now()));
  EXPECT_GT(renewed.expires_at, p.expires_at);

  httplib::Client raw("127.0.0.1", port);
  auto res = raw.Post("/wait/v1/submit",
                      to_string(canonical_encode(SubmissionRequest{leaf("v3", clock.now())})),
                      "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
  auto body = nlohmann::json::parse(res->body);
  EXPECT_EQ(body["code"], "ERR_ACTIVE_PROMISE");
  EXPECT_TRUE(body["message"].is_string());

  res = raw.Get("/wait/v1/proof?leaf_hash=AAAA&tree_size=1");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = raw.Get("/wait/v1/consistency?old=5&new=1");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(nlohmann::json::parse(res->body)["code"], "ERR_RANGE");
  res = raw.Post("/wait/v1/submit", "{}", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(LogHttpTest, ProofsOverHttpMatchInProcess) {
  std::vector<Hash32> hashes;
  for (int i = 0; i < 32; ++i) {
    auto p = client->submit(make_leaf(dev, "https://notes.example/p" + std::to_string(i), "d",
                                      clock.now()));
    hashes.push_back(p.leaf_hash);
  }
  SignedTreeHead sth = client->sth();
  EXPECT_EQ(sth.tree_size, 32u);
  EXPECT_TRUE(verify_record(sth, log_key.public_key()));
  for (std::uint64_t size = 1; size <= 32; ++size) {
    for (std::uint64_t i = 0; i < size; ++i) {
      auto remote = client->inclusion_proof(hashes[i], size);
      EXPECT_EQ(remote, service->handle_inclusion_proof(hashes[i], size));
      EXPECT_TRUE(merklelog::verify_inclusion(hashes[i], remote,
                                              {size, service->log().root_at(size)}));
    }
    auto remote = client->consistency(size, 32);
    EXPECT_EQ(remote, service->handle_consistency(size, 32));
  }
  auto entries = client->entries(0, 32);
  ASSERT_EQ(entries.size(), 32u);
  EXPECT_EQ(entries, service->handle_entries(0, 32));
}

TEST(LogHttpClientTest, UnreachableLogIsNetworkError) {
  auto client = make_http_client("http://127.0.0.1:1");
  EXPECT_EQ(code_of([&] { client->sth(); }), ErrorCode::kNetwork);
}

}  // namespace
}  // namespace waitsec::logd
