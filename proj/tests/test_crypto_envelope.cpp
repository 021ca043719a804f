#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <random>

#include "safeagg/crypto.hpp"

using namespace safeagg;

namespace {
RingVector random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RingVector v;
  v.words.resize(n);
  for (auto& w : v.words) w = rng();
  return v;
}
}  // namespace

TEST_CASE("base64 round-trips arbitrary bytes") {
  std::vector<unsigned char> bytes{0, 1, 2, 255, 254, 128, 7};
  auto b64 = to_base64(bytes.data(), bytes.size());
  CHECK(from_base64(b64) == bytes);
  CHECK_THROWS_AS(from_base64("not_base64!!"), ParseError);
}

TEST_CASE("public keys survive the text directory") {
  KeyPair kp = generate_keypair();
  CHECK(pk_from_base64(pk_to_base64(kp.pk)) == kp.pk);
  CHECK_THROWS_AS(pk_from_base64("AAAA"), ParseError);  // wrong length
}

TEST_CASE("hybrid seal/open round-trips and hides the plaintext") {
  KeyPair kp = generate_keypair();
  RingVector v = random_vector(16, 3);
  std::string wire = seal(v, kp.pk);
  CHECK(open(wire, kp) == v);
  // the wire form never contains any plaintext word's decimal form
  for (auto w : v.words) {
    CHECK(wire.find(std::to_string(w)) == std::string::npos);
  }
}

TEST_CASE("hybrid envelopes are nondeterministic per seal") {
  KeyPair kp = generate_keypair();
  RingVector v = random_vector(4, 4);
  CHECK(seal(v, kp.pk) != seal(v, kp.pk));  // fresh content key + nonce
}

TEST_CASE("opening with the wrong key fails loudly") {
  KeyPair kp = generate_keypair();
  KeyPair other = generate_keypair();
  std::string wire = seal(random_vector(8, 5), kp.pk);
  CHECK_THROWS_AS(open(wire, other), CryptoError);
}

TEST_CASE("tampering with any envelope field breaks authentication") {
  KeyPair kp = generate_keypair();
  std::string wire = seal(random_vector(8, 6), kp.pk);
  Envelope env = Envelope::from_wire(wire);

  Envelope bad = env;
  auto body = from_base64(bad.body);
  body[0] ^= 1;
  bad.body = to_base64(body.data(), body.size());
  CHECK_THROWS_AS(open(bad.to_wire(), kp), CryptoError);

  bad = env;
  auto tag = from_base64(bad.tag);
  tag[0] ^= 1;
  bad.tag = to_base64(tag.data(), tag.size());
  CHECK_THROWS_AS(open(bad.to_wire(), kp), CryptoError);

  bad = env;
  auto sealed = from_base64(bad.sealed_key);
  sealed[3] ^= 1;
  bad.sealed_key = to_base64(sealed.data(), sealed.size());
  CHECK_THROWS_AS(open(bad.to_wire(), kp), CryptoError);
}

TEST_CASE("wire form is a JSON object with the envelope's five fields") {
  KeyPair kp = generate_keypair();
  std::string wire = seal(random_vector(2, 7), kp.pk);
  auto parsed = nlohmann::json::parse(wire);
  REQUIRE(parsed.is_object());
  for (const char* field : {"sealed_key", "nonce", "body", "tag", "mode"}) {
    CHECK(parsed.contains(field));
  }
  CHECK(parsed.at("mode") == "hybrid");
  CHECK_THROWS_AS(Envelope::from_wire("[1,2]"), ParseError);
  CHECK_THROWS_AS(Envelope::from_wire("{\"nonce\":\"x\"}"), ParseError);
  CHECK_THROWS_AS(Envelope::from_wire("not json at all"), ParseError);
}

TEST_CASE("symmetric key drop-off round-trips") {
  KeyPair kp = generate_keypair();
  SymKey key = generate_sym_key();
  SymKey back = open_sym_key(seal_sym_key(key, kp.pk), kp);
  CHECK(back == key);
  KeyPair other = generate_keypair();
  CHECK_THROWS_AS(open_sym_key(seal_sym_key(key, kp.pk), other), CryptoError);
}

TEST_CASE("pre-negotiated envelopes round-trip without any public key") {
  SymKey key = generate_sym_key();
  RingVector v = random_vector(12, 8);
  reset_crypto_op_counts();
  std::string wire = seal_preneg(v, key);
  CHECK(open_preneg(wire, key) == v);
  auto counts = crypto_op_counts();
  CHECK(counts.asym_ops == 0);
  CHECK(counts.sym_ops == 2);

  auto parsed = nlohmann::json::parse(wire);
  CHECK(parsed.at("mode") == "preneg");
  CHECK(parsed.at("sealed_key").get<std::string>().empty());

  SymKey wrong = generate_sym_key();
  CHECK_THROWS_AS(open_preneg(wire, wrong), CryptoError);
}

TEST_CASE("hybrid mode counts exactly one sealed-box pair per round trip") {
  KeyPair kp = generate_keypair();
  RingVector v = random_vector(4, 9);
  reset_crypto_op_counts();
  open(seal(v, kp.pk), kp);
  auto counts = crypto_op_counts();
  CHECK(counts.asym_ops == 2);  // seal + open of the content key
  CHECK(counts.sym_ops == 2);   // secretbox create + open of the body
}

TEST_CASE("envelopes of different lengths stay distinct") {
  KeyPair kp = generate_keypair();
  for (std::size_t n : {1ul, 2ul, 31ul, 257ul}) {
    RingVector v = random_vector(n, 100 + n);
    CHECK(open(seal(v, kp.pk), kp) == v);
  }
}
