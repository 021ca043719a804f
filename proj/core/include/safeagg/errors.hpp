#pragma once

#include <stdexcept>
#include <string>

namespace safeagg {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed wire data: bad ring-vector text, bad base64, truncated envelope.
struct ParseError : Error {
  using Error::Error;
};

// Cryptographic failure: decryption with the wrong key, forged tag, missing key.
struct CryptoError : Error {
  using Error::Error;
};

// A value that cannot be represented at the configured fixed-point scale
// without overflowing the headroom reserved for aggregation.
struct RangeError : Error {
  using Error::Error;
};

// Protocol-level invariant violations: vector length mismatch between hops,
// malformed chain configuration, inconsistent group state.
struct ProtocolError : Error {
  using Error::Error;
};

// A blocking poll gave up before the remote side produced what it waited for.
struct TimeoutError : Error {
  using Error::Error;
};

// Transport-level failure talking to the controller (connection refused,
// HTTP error status, unparseable response).
struct TransportError : Error {
  using Error::Error;
};

// ---- Specific conditions raised by the protocol state machines ----

// A node id that is not registered / not part of the addressed group's chain.
struct UnknownNode : ProtocolError {
  using ProtocolError::ProtocolError;
};

// post_aggregate with from == to.
struct SelfSend : ProtocolError {
  using ProtocolError::ProtocolError;
};

// post_average from a node that is not the group's current initiator.
struct NotInitiator : ProtocolError {
  using ProtocolError::ProtocolError;
};

// A late message from a deposed initiator of an earlier aggregation attempt.
struct StaleEpoch : ProtocolError {
  using ProtocolError::ProtocolError;
};

// Finalizing with fewer than three contributors would let a participant
// recover another's input by subtraction, so the round refuses.
struct TooFewContributors : ProtocolError {
  using ProtocolError::ProtocolError;
};

// A weighted submission must carry a strictly positive weight.
struct NonPositiveWeight : ProtocolError {
  using ProtocolError::ProtocolError;
};

// An envelope failed to decrypt or authenticate.
struct DecryptFailure : CryptoError {
  using CryptoError::CryptoError;
};

// SAFE mode needs the recipient's key material before it can seal.
struct MissingKeys : CryptoError {
  using CryptoError::CryptoError;
};

// A learner's blocking step exhausted its budget; the failover driver treats
// this as "the round may have lost its initiator" and re-asks for the role.
struct RoundTimeout : TimeoutError {
  using TimeoutError::TimeoutError;
};

// The failover driver's retry cap ran out without a completed round.
struct MaxAttemptsExceeded : Error {
  using Error::Error;
};

// The controller could not be reached at all.
struct ControllerUnreachable : TransportError {
  using TransportError::TransportError;
};

// fit_timeout needs at least three distinct chain lengths to fit a
// second-degree polynomial.
struct InsufficientSamples : Error {
  using Error::Error;
};

}  // namespace safeagg
