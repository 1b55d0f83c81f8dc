#include <gtest/gtest.h>
#include <sodium.h>

#include <random>

#include "test_util.h"
#include "wait/core/bytes.h"
#include "wait/core/crypto.h"
#include "wait/core/error.h"
#include "wait/core/header.h"
#include "wait/core/records.h"
#include "wait/core/url.h"

namespace waitsec {
namespace {

using testing::make_leaf;
using testing::test_key;

std::string sodium_sha256_hex(ByteView data) {
  std::array<unsigned char, crypto_hash_sha256_BYTES> out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return to_hex(out);
}

class CoreTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { ASSERT_GE(sodium_init(), 0); }
};

TEST_F(CoreTest, DigestOfEmptyInput) {
  EXPECT_EQ(digest_bytes({}).to_string(),
            "sha256:e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_F(CoreTest, DigestOfAbc) {
  EXPECT_EQ(digest_bytes(as_bytes("abc")).to_string(),
            "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_F(CoreTest, DigestMatchesSodiumOnRandomInputs) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    Bytes data = testing::random_bytes(rng, rng() % 3000);
    Digest d = digest_bytes(data);
    EXPECT_EQ(d, digest_bytes(data));
    EXPECT_EQ(d.to_string(), "sha256:" + sodium_sha256_hex(data));
  }
}

TEST_F(CoreTest, DigestTextForm) {
  Digest d = digest_bytes(as_bytes("abc"));
  EXPECT_EQ(Digest::parse(d.to_string()), d);
  EXPECT_THROW(Digest::parse("sha256:ABCD"), Error);
  std::string upper = d.to_string();
  upper[10] = 'A';
  EXPECT_THROW(Digest::parse(upper), Error);
  EXPECT_THROW(Digest::parse("sha384:" + to_hex(d.value)), Error);
}

TEST_F(CoreTest, Base64UrlRoundTripsAndIsCanonical) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    Bytes data = testing::random_bytes(rng, rng() % 70);
    std::string text = base64url_encode(data);
    EXPECT_EQ(text.find_first_of("+/="), std::string::npos);
    auto back = base64url_decode(text);
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(*back, data);
  }
  // "AB" has non-zero trailing bits for a one byte payload; "AA" is canonical.
  EXPECT_TRUE(base64url_decode("AA").has_value());
  EXPECT_FALSE(base64url_decode("AB").has_value());
  EXPECT_FALSE(base64url_decode("AA==").has_value());
  EXPECT_FALSE(base64url_decode("A").has_value());
  EXPECT_FALSE(base64url_decode("!!!").has_value());
}

TEST_F(CoreTest, Ed25519Rfc8032Vector1) {
  auto seed = from_hex("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60");
  KeyPair pair = KeyPair::from_seed(*to_fixed<32>(*seed));
  EXPECT_EQ(to_hex(pair.public_key()),
            "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a");
  Signature sig = pair.sign({});
  EXPECT_EQ(to_hex(sig),
            "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e065224901555fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b");

  // Independent implementation agrees.
  std::array<unsigned char, crypto_sign_PUBLICKEYBYTES> pk{};
  std::array<unsigned char, crypto_sign_SECRETKEYBYTES> sk{};
  crypto_sign_seed_keypair(pk.data(), sk.data(), seed->data());
  std::array<unsigned char, crypto_sign_BYTES> sodium_sig{};
  crypto_sign_detached(sodium_sig.data(), nullptr, nullptr, 0, sk.data());
  EXPECT_EQ(to_hex(sodium_sig), to_hex(sig));
  EXPECT_TRUE(verify_signature(pair.public_key(), {}, sig));
}

TEST_F(CoreTest, Ed25519AgreesWithSodiumAndRejectsBitFlips) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 40; ++i) {
    KeyPair pair = KeyPair::generate();
    Bytes msg = testing::random_bytes(rng, 1 + rng() % 200);
    Signature sig = pair.sign(msg);
    EXPECT_TRUE(verify_signature(pair.public_key(), msg, sig));
    EXPECT_EQ(crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(),
                                          pair.public_key().data()),
              0);

    Bytes flipped = msg;
    std::size_t bit = rng() % (flipped.size() * 8);
    flipped[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    EXPECT_FALSE(verify_signature(pair.public_key(), flipped, sig));

    Signature bad = sig;
    bit = rng() % (bad.size() * 8);
    bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    EXPECT_FALSE(verify_signature(pair.public_key(), msg, bad));
  }
}

TEST_F(CoreTest, MalformedPublicKeyIsBadKey) {
  PublicKey not_canonical{};
  not_canonical.fill(0xff);
  not_canonical[0] = 0xed;
  not_canonical[31] = 0x7f;  // y = p
  EXPECT_FALSE(is_valid_public_key(not_canonical));
  try {
    verify_signature(not_canonical, {}, Signature{});
    FAIL() << "expected ERR_BAD_KEY";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadKey);
  }
}

TEST_F(CoreTest, PointValidityAgreesWithSodium) {
  std::mt19937_64 rng(5);
  int valid = 0;
  for (int i = 0; i < 2000; ++i) {
    PublicKey pk{};
    for (auto& b : pk) b = static_cast<std::uint8_t>(rng());
    bool mine = is_valid_public_key(pk);
    // libsodium additionally rejects small-order points, so only one
    // direction is an implication.
    if (crypto_core_ed25519_is_valid_point(pk.data())) EXPECT_TRUE(mine);
    valid += mine;
  }
  EXPECT_GT(valid, 800);
  EXPECT_LT(valid, 1200);
}

TEST_F(CoreTest, CanonicalLeafEncodingIsSortedAndCompact) {
  KeyPair dev = test_key(1);
  ReleaseLeaf leaf = make_leaf(dev, "https://app.example/index.html", "doc", 1700000000);
  std::string expected =
      std::string("{\"app_url\":\"https://app.example/index.html\",") +
      "\"developer_key\":\"" + base64url_encode(dev.public_key()) + "\"," +
      "\"developer_signature\":\"" + base64url_encode(*leaf.developer_signature) + "\"," +
      "\"digest\":\"" + leaf.digest.to_string() + "\"," + "\"submitted_at\":1700000000}";
  EXPECT_EQ(to_string(canonical_encode(leaf)), expected);

  // Same fields supplied in a different order and with whitespace.
  std::string permuted =
      std::string("{ \"submitted_at\": 1700000000, \"digest\": \"") + leaf.digest.to_string() +
      "\", \"developer_signature\": \"" + base64url_encode(*leaf.developer_signature) +
      "\", \"developer_key\": \"" + base64url_encode(dev.public_key()) +
      "\", \"app_url\": \"https://app.example/index.html\" }";
  EXPECT_EQ(to_string(canonical_encode(decode_release_leaf(as_bytes(permuted)))), expected);
}

TEST_F(CoreTest, CanonicalRoundTripForAllRecordKinds) {
  KeyPair dev = test_key(2);
  KeyPair log = test_key(3);
  ReleaseLeaf leaf = make_leaf(dev, "https://a.example/", "x", 5);
  Bytes lb = canonical_encode(leaf);
  EXPECT_EQ(decode_release_leaf(lb), leaf);
  EXPECT_EQ(canonical_encode(decode_release_leaf(lb)), lb);

  InclusionPromise p;
  p.app_url = leaf.app_url;
  p.digest = leaf.digest;
  p.developer_key = dev.public_key();
  p.leaf_hash = sha256(lb);
  p.issued_at = 10;
  p.expires_at = 20;
  sign_record(p, log);
  Bytes pb = canonical_encode(p);
  EXPECT_EQ(decode_inclusion_promise(pb), p);
  EXPECT_EQ(canonical_encode(decode_inclusion_promise(pb)), pb);
  EXPECT_TRUE(verify_record(p, log.public_key()));
  EXPECT_FALSE(verify_record(p, dev.public_key()));

  SignedTreeHead sth;
  sth.tree_size = 3;
  sth.root_hash = sha256(as_bytes("root"));
  sth.timestamp = 99;
  sign_record(sth, log);
  EXPECT_EQ(decode_signed_tree_head(canonical_encode(sth)), sth);
  EXPECT_TRUE(verify_record(sth, log.public_key()));

  RenewalRequest r;
  r.leaf_hash = p.leaf_hash;
  r.renewed_at = 77;
  sign_record(r, dev);
  EXPECT_EQ(decode_renewal_request(canonical_encode(r)), r);
  EXPECT_TRUE(verify_record(r));
}

TEST_F(CoreTest, EncodingRejectsOutOfDomainFields) {
  KeyPair dev = test_key(4);
  ReleaseLeaf leaf = make_leaf(dev, "https://a.example/", "x", 5);
  leaf.submitted_at = -1;
  try {
    canonical_encode(leaf);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEncoding);
  }
  leaf.submitted_at = 5;
  leaf.app_url = "ftp://a.example/";
  EXPECT_THROW(canonical_encode(leaf), Error);
  leaf.app_url = "http://a.example/";
  EXPECT_THROW(canonical_encode(leaf), Error);
  leaf.app_url = "http://127.0.0.1:8080/";
  EXPECT_NO_THROW(canonical_encode(leaf));

  auto j = to_json(make_leaf(dev, "https://a.example/", "x", 5));
  j["extra"] = 1;
  EXPECT_THROW(release_leaf_from_json(j), Error);
  j.erase("extra");
  j["submitted_at"] = 1.5;
  EXPECT_THROW(release_leaf_from_json(j), Error);
  j["submitted_at"] = -3;
  EXPECT_THROW(release_leaf_from_json(j), Error);
  EXPECT_THROW(decode_release_leaf(as_bytes("{not json")), Error);
}

TEST_F(CoreTest, SignatureCoversEncodingWithoutSignatureKey) {
  KeyPair dev = test_key(5);
  ReleaseLeaf leaf = make_leaf(dev, "https://a.example/", "x", 5);
  std::string unsigned_text = to_string(signing_bytes(leaf));
  EXPECT_EQ(unsigned_text.find("developer_signature"), std::string::npos);
  EXPECT_TRUE(verify_record(leaf));
  ReleaseLeaf changed = leaf;
  changed.submitted_at += 1;
  EXPECT_FALSE(verify_record(changed));
  changed = leaf;
  changed.developer_signature.reset();
  EXPECT_FALSE(verify_record(changed));
}

TEST_F(CoreTest, DistinctRecordsEncodeDistinctly) {
  KeyPair dev = test_key(6);
  ReleaseLeaf a = make_leaf(dev, "https://a.example/", "x", 5);
  ReleaseLeaf b = a;
  b.app_url = "https://a.example/x";
  EXPECT_NE(canonical_encode(a), canonical_encode(b));
  ReleaseLeaf c = a;
  EXPECT_EQ(canonical_encode(a), canonical_encode(c));
}

InclusionPromise sample_promise(const KeyPair& log, std::int64_t issued) {
  KeyPair dev = test_key(9);
  InclusionPromise p;
  p.app_url = "https://app.example/";
  p.digest = digest_bytes(as_bytes("doc"));
  p.developer_key = dev.public_key();
  p.issued_at = issued;
  p.expires_at = issued + 100;
  sign_record(p, log);
  return p;
}

TEST_F(CoreTest, HeaderSinglePromiseRoundTrips) {
  InclusionPromise p = sample_promise(test_key(7), 1);
  std::string value = promise_to_header({p});
  EXPECT_EQ(value.find(','), std::string::npos);
  EXPECT_EQ(value, base64url_encode(canonical_encode(p)));
  auto back = header_to_promises(value);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], p);
}

TEST_F(CoreTest, HeaderTwoPromisesPreserveOrder) {
  InclusionPromise a = sample_promise(test_key(7), 1);
  InclusionPromise b = sample_promise(test_key(8), 2);
  std::string value = promise_to_header({a, b});
  EXPECT_EQ(std::count(value.begin(), value.end(), ','), 1);
  auto back = header_to_promises(value);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], a);
  EXPECT_EQ(back[1], b);
  // Optional whitespace around tokens is tolerated.
  auto spaced = header_to_promises(base64url_encode(canonical_encode(a)) + " , " +
                                   base64url_encode(canonical_encode(b)));
  EXPECT_EQ(spaced.size(), 2u);
}

TEST_F(CoreTest, HeaderGarbageIsSyntaxError) {
  try {
    header_to_promises("!!!");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kHeaderSyntax);
  }
  EXPECT_THROW(header_to_promises(""), Error);
  EXPECT_THROW(promise_to_header({}), Error);
}

TEST_F(CoreTest, HeaderSkipsUnknownVersions) {
  KeyPair log = test_key(7);
  InclusionPromise future = sample_promise(log, 1);
  future.version = 2;
  sign_record(future, log);
  InclusionPromise current = sample_promise(log, 3);
  auto parsed = parse_promise_header(promise_to_header({future, current}) + ",!!!");
  EXPECT_EQ(parsed.unknown_version, 1u);
  EXPECT_EQ(parsed.undecodable, 1u);
  ASSERT_EQ(parsed.promises.size(), 1u);
  EXPECT_EQ(parsed.promises[0], current);
  // Only a future version present: decodes, nothing usable, not a syntax error.
  EXPECT_TRUE(header_to_promises(promise_to_header({future})).empty());
}

TEST_F(CoreTest, UrlParsingAndNormalization) {
  auto u = Url::parse("HTTPS://App.Example:443/a/./b/../c?q=1#f");
  ASSERT_TRUE(u);
  EXPECT_EQ(u->without_query(), "https://app.example/a/c");
  EXPECT_EQ(u->query, "q=1");
  EXPECT_EQ(u->fragment, "f");
  EXPECT_EQ(Url::parse("https://app.example")->path, "/");
  EXPECT_EQ(Url::parse("http://127.0.0.1:8080/x")->origin(), "http://127.0.0.1:8080");
  EXPECT_FALSE(Url::parse("https://user@host/"));
  EXPECT_FALSE(Url::parse("ftp://host/"));
  EXPECT_FALSE(Url::parse("https://host:99999/"));
  EXPECT_FALSE(Url::parse("/relative"));

  EXPECT_TRUE(is_loopback_host("127.0.0.1"));
  EXPECT_TRUE(is_loopback_host("127.9.8.7"));
  EXPECT_TRUE(is_loopback_host("localhost"));
  EXPECT_TRUE(is_loopback_host("[::1]"));
  EXPECT_FALSE(is_loopback_host("127.0.0.1.example"));
  EXPECT_FALSE(is_loopback_host("128.0.0.1"));

  EXPECT_TRUE(is_valid_app_url("https://app.example/index.html"));
  EXPECT_FALSE(is_valid_app_url("https://app.example/index.html?x"));
  EXPECT_FALSE(is_valid_app_url("https://App.example/"));
  EXPECT_FALSE(is_valid_app_url("https://app.example:443/"));
  EXPECT_EQ(*normalize_app_url("https://App.example:443/?x#y"), "https://app.example/");
}

TEST_F(CoreTest, UrlResolution) {
  Url base = *Url::parse("https://app.example/app/index.html");
  EXPECT_EQ(resolve_url(base, "js/a.js")->to_string(), "https://app.example/app/js/a.js");
  EXPECT_EQ(resolve_url(base, "./js/a.js")->to_string(), "https://app.example/app/js/a.js");
  EXPECT_EQ(resolve_url(base, "../x.css")->to_string(), "https://app.example/x.css");
  EXPECT_EQ(resolve_url(base, "/root.js?v=1")->to_string(), "https://app.example/root.js?v=1");
  EXPECT_EQ(resolve_url(base, "//cdn.example/lib.js")->to_string(),
            "https://cdn.example/lib.js");
  EXPECT_EQ(resolve_url(base, "https://cdn.example/x.js")->origin(), "https://cdn.example");
}

TEST_F(CoreTest, ErrorNamesRoundTrip) {
  for (ErrorCode c : {ErrorCode::kEncoding, ErrorCode::kActivePromise,
                      ErrorCode::kLogEquivocation, ErrorCode::kUnexpectedVerdict}) {
    EXPECT_EQ(error_code_from_name(error_code_name(c)), c);
  }
  EXPECT_EQ(error_code_name(ErrorCode::kStaleTimestamp), "ERR_STALE_TIMESTAMP");
  EXPECT_FALSE(error_code_from_name("ERR_NOPE"));
}

}  // namespace
}  // namespace waitsec
