#include "safeagg/ring.hpp"

#include <sodium.h>

#include <charconv>
#include <cmath>
#include <cstring>

namespace safeagg {

namespace {

void require_same_size(const RingVector& a, const RingVector& b) {
  if (a.size() != b.size()) {
    throw ProtocolError("ring vector size mismatch: " +
                        std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
  }
}

}  // namespace

RingVector ring_add(const RingVector& a, const RingVector& b) {
  RingVector out = a;
  ring_add_in_place(out, b);
  return out;
}

void ring_add_in_place(RingVector& acc, const RingVector& b) {
  require_same_size(acc, b);
  for (std::size_t i = 0; i < b.size(); ++i) acc.words[i] += b.words[i];
}

RingVector ring_sub(const RingVector& a, const RingVector& b) {
  require_same_size(a, b);
  RingVector out;
  out.words.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    out.words[i] = a.words[i] - b.words[i];
  return out;
}

std::string ring_to_text(const RingVector& v) {
  std::string out;
  out.reserve(v.size() * 21);
  char buf[24];
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(' ');
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v.words[i]);
    out.append(buf, p);
  }
  return out;
}

RingVector ring_from_text(std::string_view text) {
  RingVector out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == ' ') {
      ++i;
      continue;
    }
    std::size_t end = text.find(' ', i);
    if (end == std::string_view::npos) end = text.size();
    std::uint64_t word = 0;
    const char* first = text.data() + i;
    const char* last = text.data() + end;
    auto [p, ec] = std::from_chars(first, last, word, 10);
    if (ec != std::errc() || p != last) {
      throw ParseError("ring vector text: bad token '" +
                       std::string(text.substr(i, end - i)) + "'");
    }
    out.words.push_back(word);
    i = end;
  }
  if (out.words.empty()) throw ParseError("ring vector text: empty");
  return out;
}

RingVector FixedPointCodec::encode(std::span<const double> values) const {
  RingVector out;
  out.words.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = values[i];
    if (!std::isfinite(x)) {
      throw RangeError("encode: non-finite value at index " +
                       std::to_string(i));
    }
    const double scaled = x * static_cast<double>(scale);
    if (!(std::fabs(scaled) < static_cast<double>(kMaxEncodedMagnitude))) {
      throw RangeError("encode: |" + std::to_string(x) + "| * scale exceeds " +
                       "the 2^62 headroom bound");
    }
    const long long q = std::llround(scaled);
    // Two's-complement wrap: negatives land at the top of the ring.
    out.words[i] = static_cast<std::uint64_t>(q);
  }
  return out;
}

std::vector<double> FixedPointCodec::decode(const RingVector& v) const {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto s = static_cast<std::int64_t>(v.words[i]);
    out[i] = static_cast<double>(static_cast<long double>(s) /
                                 static_cast<long double>(scale));
  }
  return out;
}

Mask gen_mask(std::uint64_t seed, std::size_t length) {
  if (sodium_init() < 0) throw CryptoError("libsodium failed to initialize");

  unsigned char key[crypto_hash_sha256_BYTES];
  static_assert(crypto_hash_sha256_BYTES == crypto_stream_chacha20_KEYBYTES);
  unsigned char seed_le[8];
  for (int b = 0; b < 8; ++b)
    seed_le[b] = static_cast<unsigned char>(seed >> (8 * b));
  crypto_hash_sha256(key, seed_le, sizeof seed_le);

  const unsigned char nonce[crypto_stream_chacha20_NONCEBYTES] = {0};
  std::vector<unsigned char> stream(length * 8);
  if (!stream.empty() &&
      crypto_stream_chacha20(stream.data(), stream.size(), nonce, key) != 0) {
    throw CryptoError("chacha20 keystream generation failed");
  }

  Mask m;
  m.seed = seed;
  m.pad.words.resize(length);
  for (std::size_t i = 0; i < length; ++i) {
    std::uint64_t w = 0;
    for (int b = 7; b >= 0; --b) w = (w << 8) | stream[i * 8 + b];
    m.pad.words[i] = w;
  }
  return m;
}

std::vector<double> finalize_average(const RingVector& masked_total,
                                     const Mask& mask, long contributors,
                                     const FixedPointCodec& codec) {
  if (contributors < kMinContributors) {
    throw TooFewContributors(
        "refusing to average " + std::to_string(contributors) +
        " contributors; need at least " + std::to_string(kMinContributors) +
        " or an input could be recovered by subtraction");
  }
  const RingVector total = ring_sub(masked_total, mask.pad);
  std::vector<double> out(total.size());
  for (std::size_t i = 0; i < total.size(); ++i) {
    const auto s = static_cast<std::int64_t>(total.words[i]);
    out[i] = static_cast<double>(static_cast<long double>(s) /
                                 static_cast<long double>(contributors) /
                                 static_cast<long double>(codec.scale));
  }
  return out;
}

}  // namespace safeagg
