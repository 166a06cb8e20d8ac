#pragma once

#include "frh/errors.hpp"
#include "frh/frame.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace frh {

using TokenId = std::int32_t;
using TokenIds = std::vector<TokenId>;

/// Token strings indexed by id. Ids are dense in [0, V).
class Vocab {
 public:
  Vocab() = default;
  /// Throws FormatError on empty or duplicate tokens.
  explicit Vocab(std::vector<std::string> tokens);

  /// One token per line; a final newline does not start a new token.
  static Vocab load(std::istream& in);
  static Vocab load_file(const std::filesystem::path& path);
  void save(std::ostream& out) const;
  void save_file(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view s) const;
  std::size_t max_token_length() const { return max_len_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t max_len_ = 0;
};

/// Raised by tokenize when no vocab entry covers the text at `offset` (bytes).
class TokenizeError : public FormatError {
 public:
  TokenizeError(std::size_t offset, const std::string& msg) : FormatError(msg), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Greedy longest-prefix segmentation.
TokenIds tokenize(const Vocab& vocab, std::string_view text);

/// Concatenation of the token strings.
std::string detokenize(const Vocab& vocab, std::span<const TokenId> ids);

/// Row mean of W_U, accumulated in row order.
Vector compute_bias(const Matrix& unembedding);

/**
 * M = (Cov + lambda * tr(Cov)/d * I)^-1, Cov the population (1/V) covariance of
 * the rows of W_U. Throws DomainError if the regularized covariance is not PD.
 */
Metric compute_whitening(const Matrix& unembedding, double lambda = 1e-6);

/**
 * The unembedding geometry: W_U (V x d), its row mean u0 and whitening metric
 * M. Immutable after construction.
 */
class UnembeddingSpace {
 public:
  explicit UnembeddingSpace(Matrix unembedding, double lambda = 1e-6);

  Index vocab_size() const { return unembedding_.rows(); }
  Index dim() const { return unembedding_.cols(); }
  double lambda() const { return lambda_; }

  const Matrix& unembedding() const { return unembedding_; }
  const Vector& bias() const { return bias_; }
  const Metric& metric() const { return metric_; }
  /// d x V; column y is u(y) - u0.
  const Matrix& debiased() const { return debiased_; }

 private:
  Matrix unembedding_;
  double lambda_;
  Vector bias_;
  Metric metric_;
  Matrix debiased_;
};

/// u(id) - u0. Throws NotFoundError when id is outside [0, V).
Vector token_vector(const UnembeddingSpace& space, TokenId id);

/// d x t frame whose column j is token_vector(ids[j]); requires 1 <= t <= d.
Frame word_frame(const UnembeddingSpace& space, std::span<const TokenId> ids);

}  // namespace frh
