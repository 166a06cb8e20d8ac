#pragma once

#include "frh/frame.hpp"
#include "frh/token_space.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace frh {

struct BackendMeta {
  Index d = 0;
  Index vocab_size = 0;
  std::optional<TokenId> bos;
  std::optional<TokenId> eos;
  bool causal = false;
};

struct Candidate {
  TokenId token = 0;
  double logit = 0.0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/**
 * Model contract used by probing and guided decoding.
 *
 * A backend session serves one caller at a time. features() returns the
 * final-layer hidden states as a d x t matrix (column i is position i).
 * top_k() returns the k highest logits, sorted descending with ties broken
 * by ascending token id.
 */
class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendMeta meta() = 0;
  virtual TokenIds tokenize(std::string_view text) = 0;
  virtual Matrix features(std::span<const TokenId> tokens) = 0;
  virtual std::vector<Candidate> top_k(std::span<const TokenId> tokens, int k) = 0;
};

/// Throws BackendError unless the backend's d and vocabulary match the space.
void validate_meta(const BackendMeta& meta, const UnembeddingSpace& space);

/// Sorted top-k selection over a logit vector with the (logit desc, id asc) rule.
std::vector<Candidate> select_top_k(const Vector& logits, int k);

struct FeatureFrame {
  Frame frame;
  /// Length of the source sequence.
  Index t = 0;
  Index k = 0;
  /// t < k: the frame was left-padded with zero columns.
  bool padded = false;
};

/// Last k hidden states in order; left zero-padded when t < k.
FeatureFrame feature_frame(const Matrix& hidden, Index k);

/**
 * Deterministic desk-scale model.
 *
 *   h_0 = 0,  h_t = tanh(A h_{t-1} + B e(x_t)),  logit(y | x) = u(y)^T h_t
 *
 * W_U and the embedding table e are standard Gaussian (V x d), A is Gaussian
 * rescaled to spectral norm 0.9, B is Gaussian / sqrt(d). All draws come from
 * Rng(mix64(seed)) in the order W_U, e, A, B. Token 0 is "<s>" (BOS); there
 * is no EOS token. Instances are immutable and reentrant.
 */
class ToyBackend : public Backend {
 public:
  ToyBackend(std::uint64_t seed, Index d, Index vocab_size);

  BackendMeta meta() override;
  TokenIds tokenize(std::string_view text) override;
  Matrix features(std::span<const TokenId> tokens) override;
  std::vector<Candidate> top_k(std::span<const TokenId> tokens, int k) override;

  /// V x d; rows are the raw (not debiased) unembedding vectors.
  const Matrix& unembedding() const { return unembedding_; }
  const Matrix& embedding() const { return embedding_; }
  const Matrix& recurrence() const { return recurrence_; }
  const Matrix& input_map() const { return input_map_; }
  const Vocab& vocab() const { return vocab_; }
  std::uint64_t seed() const { return seed_; }

  /// logits = W_U h
  Vector logits(const Vector& hidden) const;

 private:
  void check_tokens(std::span<const TokenId> tokens) const;

  std::uint64_t seed_;
  Matrix unembedding_;
  Matrix embedding_;
  Matrix recurrence_;
  Matrix input_map_;
  Vocab vocab_;
};

/**
 * Toy vocabulary of size V: "<s>", the letters a-z, "_", then consonant-vowel,
 * vowel-consonant and consonant-vowel-consonant syllables in lexicographic
 * order until V entries exist.
 */
Vocab toy_vocab(Index vocab_size);

/// Newline-delimited byte stream carrying the wire protocol.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual void send_line(const std::string& line) = 0;
  /// Throws BackendError on end of stream.
  virtual std::string receive_line() = 0;
};

/// Spawns `/bin/sh -c command` and talks to its stdin/stdout.
std::unique_ptr<LineTransport> spawn_process_transport(const std::string& command);
/// Connects to host:port over TCP.
std::unique_ptr<LineTransport> connect_tcp_transport(const std::string& host, std::uint16_t port);

/**
 * Client for the JSON-lines wire protocol. Every reply is type-checked;
 * malformed replies and {"ok":false} raise BackendError. Hidden states are
 * truncated to binary32.
 */
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(std::unique_ptr<LineTransport> transport);

  BackendMeta meta() override;
  TokenIds tokenize(std::string_view text) override;
  Matrix features(std::span<const TokenId> tokens) override;
  std::vector<Candidate> top_k(std::span<const TokenId> tokens, int k) override;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

/**
 * Opens a backend from a spec string:
 *   toy:SEED:D:V     in-process ToyBackend
 *   exec:COMMAND     RemoteBackend over a spawned process
 *   tcp:HOST:PORT    RemoteBackend over TCP
 */
std::unique_ptr<Backend> open_backend(const std::string& spec);

}  // namespace frh
