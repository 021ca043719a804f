#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "safeagg/ring.hpp"
#include "safeagg/types.hpp"

namespace safeagg {

inline constexpr std::size_t kPublicKeyBytes = 32;  // X25519
inline constexpr std::size_t kSecretKeyBytes = 32;
inline constexpr std::size_t kSymKeyBytes = 32;  // XSalsa20-Poly1305

using PublicKey = std::array<unsigned char, kPublicKeyBytes>;
using SecretKey = std::array<unsigned char, kSecretKeyBytes>;
using SymKey = std::array<unsigned char, kSymKeyBytes>;

struct KeyPair {
  PublicKey pk{};
  SecretKey sk{};
};

KeyPair generate_keypair();
SymKey generate_sym_key();

std::string to_base64(const unsigned char* data, std::size_t len);
std::vector<unsigned char> from_base64(std::string_view b64);
std::string pk_to_base64(const PublicKey& pk);
PublicKey pk_from_base64(std::string_view b64);

// What actually travels between hops in encrypted mode. The payload is a
// ring vector serialized as little-endian u64s, sealed under a fresh
// one-shot content key (XSalsa20-Poly1305); the content key itself is sealed
// to the recipient's public key (X25519 sealed box). With pre-negotiated
// pairwise keys the sealed_key field is empty and the body is sealed
// directly under the shared key — no public-key work on the hot path.
struct Envelope {
  std::string sealed_key;  // base64; empty in "preneg" mode
  std::string nonce;       // base64, 24 bytes
  std::string body;        // base64 ciphertext
  std::string tag;         // base64, 16-byte MAC
  std::string mode;        // "hybrid" | "preneg"

  std::string to_wire() const;
  static Envelope from_wire(std::string_view text);
};

// Hybrid mode: anyone holding the recipient's public key can seal.
std::string seal(const RingVector& v, const PublicKey& recipient);
RingVector open(std::string_view wire, const KeyPair& self);

// Pre-negotiated mode. Each node generates one symmetric key per peer and
// distributes it sealed to that peer's public key; the key a node generated
// for peer P protects traffic P sends back to it. Both directions of every
// pair are filled in before the first round so any fail-over re-routing can
// still find a shared key.
struct PrenegTable {
  std::map<NodeId, SymKey> generated;  // ours, indexed by the peer we gave it to
  std::map<NodeId, SymKey> received;   // theirs, indexed by who generated it
};

std::string seal_sym_key(const SymKey& key, const PublicKey& recipient);
SymKey open_sym_key(std::string_view sealed_b64, const KeyPair& self);

std::string seal_preneg(const RingVector& v, const SymKey& key);
RingVector open_preneg(std::string_view wire, const SymKey& key);

// Process-wide tallies of crypto operations, for demonstrating that rounds
// in pre-negotiated mode never touch public-key primitives.
struct CryptoOpCounts {
  long asym_ops = 0;  // sealed-box create/open
  long sym_ops = 0;   // secretbox create/open
};
CryptoOpCounts crypto_op_counts();
void reset_crypto_op_counts();

}  // namespace safeagg
