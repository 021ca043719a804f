#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "safeagg/errors.hpp"

namespace safeagg {

// Aggregation happens element-wise in the ring of integers mod 2^64, i.e.
// native uint64 arithmetic with wrap-around. Uniform masks are exactly the
// one-time pads of this ring: adding one makes a vector indistinguishable
// from random, and subtracting it afterwards is lossless.
struct RingVector {
  std::vector<std::uint64_t> words;

  std::size_t size() const { return words.size(); }
  bool operator==(const RingVector&) const = default;
};

RingVector ring_add(const RingVector& a, const RingVector& b);
RingVector ring_sub(const RingVector& a, const RingVector& b);
void ring_add_in_place(RingVector& acc, const RingVector& b);

// Wire form: the decimal value of each word, space separated
// ("18446744073709551615 42 ..."). ring_from_text rejects anything that is
// not exactly a non-empty list of decimal u64s.
std::string ring_to_text(const RingVector& v);
RingVector ring_from_text(std::string_view text);

// Encoded magnitudes must stay below 2^62, leaving two bits of headroom so
// that sums over any realistic cohort cannot creep past the signed range and
// silently flip sign on decode.
inline constexpr std::uint64_t kMaxEncodedMagnitude = std::uint64_t{1} << 62;

// Maps reals onto ring elements as two's-complement fixed-point integers:
// x -> round(x * scale), negatives wrapping to the top of the ring. A power
// of two scale keeps representable values exact through encode/decode.
struct FixedPointCodec {
  std::uint64_t scale = std::uint64_t{1} << 16;

  RingVector encode(std::span<const double> values) const;
  std::vector<double> decode(const RingVector& v) const;
};

// A round's additive mask: the pad itself plus the seed it expands from,
// kept so the initiator can re-derive or audit it.
struct Mask {
  std::uint64_t seed = 0;
  RingVector pad;
};

// Expands a seed into `length` ring words via a ChaCha20 keystream (key =
// SHA-256 of the little-endian seed, all-zero nonce). Deterministic, and a
// longer expansion of the same seed starts with the shorter one.
Mask gen_mask(std::uint64_t seed, std::size_t length);

// Final step of a round: strip the pad from the masked total, then divide
// the exact signed sum by the contributor count. Refuses to produce an
// average of fewer than three contributors — with two, either participant
// could recover the other's input by subtracting its own.
std::vector<double> finalize_average(const RingVector& masked_total,
                                     const Mask& mask, long contributors,
                                     const FixedPointCodec& codec);

inline constexpr long kMinContributors = 3;

}  // namespace safeagg
