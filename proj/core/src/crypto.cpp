#include "safeagg/crypto.hpp"

#include <sodium.h>

#include <atomic>
#include <cstring>

#include <nlohmann/json.hpp>

namespace safeagg {

namespace {

std::atomic<long> g_asym_ops{0};
std::atomic<long> g_sym_ops{0};

void ensure_sodium() {
  if (sodium_init() < 0) throw CryptoError("libsodium failed to initialize");
}

std::vector<unsigned char> ring_to_bytes(const RingVector& v) {
  std::vector<unsigned char> out(v.size() * 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint64_t w = v.words[i];
    for (int b = 0; b < 8; ++b) {
      out[i * 8 + b] = static_cast<unsigned char>(w & 0xff);
      w >>= 8;
    }
  }
  return out;
}

RingVector ring_from_bytes(const std::vector<unsigned char>& bytes) {
  if (bytes.size() % 8 != 0) {
    throw ParseError("sealed payload is not a whole number of ring words");
  }
  RingVector v;
  v.words.resize(bytes.size() / 8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint64_t w = 0;
    for (int b = 7; b >= 0; --b) w = (w << 8) | bytes[i * 8 + b];
    v.words[i] = w;
  }
  return v;
}

// Seals ring bytes under `key`, filling nonce/body/tag of an envelope.
void secretbox_into(Envelope& env, const RingVector& v, const SymKey& key) {
  static_assert(kSymKeyBytes == crypto_secretbox_KEYBYTES);
  const std::vector<unsigned char> plain = ring_to_bytes(v);
  unsigned char nonce[crypto_secretbox_NONCEBYTES];
  randombytes_buf(nonce, sizeof nonce);
  std::vector<unsigned char> body(plain.size());
  unsigned char tag[crypto_secretbox_MACBYTES];
  crypto_secretbox_detached(body.data(), tag, plain.data(), plain.size(),
                            nonce, key.data());
  g_sym_ops.fetch_add(1, std::memory_order_relaxed);
  env.nonce = to_base64(nonce, sizeof nonce);
  env.body = to_base64(body.data(), body.size());
  env.tag = to_base64(tag, sizeof tag);
}

RingVector secretbox_open_from(const Envelope& env, const SymKey& key) {
  const auto nonce = from_base64(env.nonce);
  const auto body = from_base64(env.body);
  const auto tag = from_base64(env.tag);
  if (nonce.size() != crypto_secretbox_NONCEBYTES ||
      tag.size() != crypto_secretbox_MACBYTES) {
    throw ParseError("envelope nonce/tag has wrong length");
  }
  std::vector<unsigned char> plain(body.size());
  g_sym_ops.fetch_add(1, std::memory_order_relaxed);
  if (crypto_secretbox_open_detached(plain.data(), body.data(), tag.data(),
                                     body.size(), nonce.data(),
                                     key.data()) != 0) {
    throw CryptoError("envelope body failed to authenticate");
  }
  return ring_from_bytes(plain);
}

}  // namespace

KeyPair generate_keypair() {
  ensure_sodium();
  static_assert(kPublicKeyBytes == crypto_box_PUBLICKEYBYTES);
  static_assert(kSecretKeyBytes == crypto_box_SECRETKEYBYTES);
  KeyPair kp;
  crypto_box_keypair(kp.pk.data(), kp.sk.data());
  return kp;
}

SymKey generate_sym_key() {
  ensure_sodium();
  SymKey key;
  randombytes_buf(key.data(), key.size());
  return key;
}

std::string to_base64(const unsigned char* data, std::size_t len) {
  std::string out(sodium_base64_encoded_len(len, sodium_base64_VARIANT_ORIGINAL),
                  '\0');
  sodium_bin2base64(out.data(), out.size(), data, len,
                    sodium_base64_VARIANT_ORIGINAL);
  out.resize(std::strlen(out.c_str()));  // drop the terminator slot
  return out;
}

std::vector<unsigned char> from_base64(std::string_view b64) {
  std::vector<unsigned char> out(b64.size() / 4 * 3 + 3);
  std::size_t written = 0;
  if (sodium_base642bin(out.data(), out.size(), b64.data(), b64.size(), nullptr,
                        &written, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0) {
    throw ParseError("invalid base64");
  }
  out.resize(written);
  return out;
}

std::string pk_to_base64(const PublicKey& pk) {
  return to_base64(pk.data(), pk.size());
}

PublicKey pk_from_base64(std::string_view b64) {
  const auto bytes = from_base64(b64);
  if (bytes.size() != kPublicKeyBytes) {
    throw ParseError("public key has wrong length: " +
                     std::to_string(bytes.size()));
  }
  PublicKey pk;
  std::memcpy(pk.data(), bytes.data(), pk.size());
  return pk;
}

std::string Envelope::to_wire() const {
  nlohmann::json j{{"sealed_key", sealed_key},
                   {"nonce", nonce},
                   {"body", body},
                   {"tag", tag},
                   {"mode", mode}};
  return j.dump();
}

Envelope Envelope::from_wire(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw ParseError("envelope is not a JSON object");
  }
  Envelope env;
  try {
    env.sealed_key = j.at("sealed_key").get<std::string>();
    env.nonce = j.at("nonce").get<std::string>();
    env.body = j.at("body").get<std::string>();
    env.tag = j.at("tag").get<std::string>();
    env.mode = j.at("mode").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("envelope missing field: ") + e.what());
  }
  return env;
}

std::string seal(const RingVector& v, const PublicKey& recipient) {
  ensure_sodium();
  const SymKey content_key = generate_sym_key();
  Envelope env;
  env.mode = "hybrid";
  secretbox_into(env, v, content_key);

  unsigned char sealed[kSymKeyBytes + crypto_box_SEALBYTES];
  if (crypto_box_seal(sealed, content_key.data(), content_key.size(),
                      recipient.data()) != 0) {
    throw CryptoError("sealing content key failed");
  }
  g_asym_ops.fetch_add(1, std::memory_order_relaxed);
  env.sealed_key = to_base64(sealed, sizeof sealed);
  return env.to_wire();
}

RingVector open(std::string_view wire, const KeyPair& self) {
  ensure_sodium();
  const Envelope env = Envelope::from_wire(wire);
  if (env.mode != "hybrid") {
    throw CryptoError("expected a hybrid envelope, got mode '" + env.mode +
                      "'");
  }
  const auto sealed = from_base64(env.sealed_key);
  if (sealed.size() != kSymKeyBytes + crypto_box_SEALBYTES) {
    throw ParseError("sealed content key has wrong length");
  }
  SymKey content_key;
  g_asym_ops.fetch_add(1, std::memory_order_relaxed);
  if (crypto_box_seal_open(content_key.data(), sealed.data(), sealed.size(),
                           self.pk.data(), self.sk.data()) != 0) {
    throw CryptoError("content key was not sealed to this node's key");
  }
  return secretbox_open_from(env, content_key);
}

std::string seal_sym_key(const SymKey& key, const PublicKey& recipient) {
  ensure_sodium();
  unsigned char sealed[kSymKeyBytes + crypto_box_SEALBYTES];
  if (crypto_box_seal(sealed, key.data(), key.size(), recipient.data()) != 0) {
    throw CryptoError("sealing pre-negotiated key failed");
  }
  g_asym_ops.fetch_add(1, std::memory_order_relaxed);
  return to_base64(sealed, sizeof sealed);
}

SymKey open_sym_key(std::string_view sealed_b64, const KeyPair& self) {
  ensure_sodium();
  const auto sealed = from_base64(sealed_b64);
  if (sealed.size() != kSymKeyBytes + crypto_box_SEALBYTES) {
    throw ParseError("sealed pre-negotiated key has wrong length");
  }
  SymKey key;
  g_asym_ops.fetch_add(1, std::memory_order_relaxed);
  if (crypto_box_seal_open(key.data(), sealed.data(), sealed.size(),
                           self.pk.data(), self.sk.data()) != 0) {
    throw CryptoError("pre-negotiated key was not sealed to this node's key");
  }
  return key;
}

std::string seal_preneg(const RingVector& v, const SymKey& key) {
  ensure_sodium();
  Envelope env;
  env.mode = "preneg";
  env.sealed_key = "";
  secretbox_into(env, v, key);
  return env.to_wire();
}

RingVector open_preneg(std::string_view wire, const SymKey& key) {
  ensure_sodium();
  const Envelope env = Envelope::from_wire(wire);
  if (env.mode != "preneg") {
    throw CryptoError("expected a preneg envelope, got mode '" + env.mode +
                      "'");
  }
  return secretbox_open_from(env, key);
}

CryptoOpCounts crypto_op_counts() {
  return {g_asym_ops.load(std::memory_order_relaxed),
          g_sym_ops.load(std::memory_order_relaxed)};
}

void reset_crypto_op_counts() {
  g_asym_ops.store(0, std::memory_order_relaxed);
  g_sym_ops.store(0, std::memory_order_relaxed);
}

}  // namespace safeagg
