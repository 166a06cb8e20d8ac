#include "frh/backend.hpp"

#include "frh/errors.hpp"
#include "frh/random.hpp"

#include <algorithm>
#include <numeric>

namespace frh {

void validate_meta(const BackendMeta& meta, const UnembeddingSpace& space) {
  if (meta.d != space.dim() || meta.vocab_size != space.vocab_size()) {
    throw BackendError("backend shape (d=" + std::to_string(meta.d) + ", V=" +
                       std::to_string(meta.vocab_size) + ") does not match the space (d=" +
                       std::to_string(space.dim()) + ", V=" + std::to_string(space.vocab_size()) +
                       ")");
  }
}

std::vector<Candidate> select_top_k(const Vector& logits, int k) {
  if (k < 1) throw DomainError("top_k: k must be >= 1");
  if (k > logits.size()) {
    throw DomainError("top_k: k = " + std::to_string(k) + " exceeds vocabulary size " +
                      std::to_string(logits.size()));
  }
  std::vector<TokenId> ids(static_cast<std::size_t>(logits.size()));
  std::iota(ids.begin(), ids.end(), TokenId{0});
  std::partial_sort(ids.begin(), ids.begin() + k, ids.end(), [&](TokenId a, TokenId b) {
    if (logits(a) != logits(b)) return logits(a) > logits(b);
    return a < b;
  });
  std::vector<Candidate> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back({ids[static_cast<std::size_t>(i)], logits(ids[static_cast<std::size_t>(i)])});
  return out;
}

FeatureFrame feature_frame(const Matrix& hidden, Index k) {
  if (k <= 0) throw DomainError("feature_frame: k must be >= 1");
  const Index t = hidden.cols();
  FeatureFrame out;
  out.t = t;
  out.k = k;
  if (t >= k) {
    out.frame = Frame(Matrix(hidden.rightCols(k)));
  } else {
    Matrix cols = Matrix::Zero(hidden.rows(), k);
    cols.rightCols(t) = hidden;
    out.frame = Frame(std::move(cols));
    out.padded = true;
  }
  return out;
}

Vocab toy_vocab(Index vocab_size) {
  static constexpr std::string_view kConsonants = "bcdfghjklmnpqrstvwxyz";
  static constexpr std::string_view kVowels = "aeiou";

  std::vector<std::string> tokens{"<s>"};
  for (char c = 'a'; c <= 'z'; ++c) tokens.emplace_back(1, c);
  tokens.emplace_back("_");
  for (char c : kConsonants)
    for (char v : kVowels) tokens.push_back({c, v});
  for (char v : kVowels)
    for (char c : kConsonants) tokens.push_back({v, c});
  for (char c1 : kConsonants)
    for (char v : kVowels)
      for (char c2 : kConsonants) tokens.push_back({c1, v, c2});

  if (vocab_size > static_cast<Index>(tokens.size())) {
    throw DomainError("toy vocabulary supports at most " + std::to_string(tokens.size()) + " tokens");
  }
  tokens.resize(static_cast<std::size_t>(vocab_size));
  return Vocab(std::move(tokens));
}

ToyBackend::ToyBackend(std::uint64_t seed, Index d, Index vocab_size)
    : seed_(seed), vocab_(toy_vocab(vocab_size)) {
  if (d < 4) throw DomainError("toy backend requires d >= 4");
  if (vocab_size < 8) throw DomainError("toy backend requires vocab_size >= 8");
  Rng rng(mix64(seed));
  unembedding_ = rng.gaussian_matrix(vocab_size, d);
  embedding_ = rng.gaussian_matrix(vocab_size, d);
  Matrix a = rng.gaussian_matrix(d, d);
  const double spectral = Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
  recurrence_ = a * (0.9 / spectral);
  input_map_ = rng.gaussian_matrix(d, d) / std::sqrt(static_cast<double>(d));
}

BackendMeta ToyBackend::meta() {
  BackendMeta m;
  m.d = unembedding_.cols();
  m.vocab_size = unembedding_.rows();
  m.bos = 0;
  m.causal = true;
  return m;
}

TokenIds ToyBackend::tokenize(std::string_view text) { return frh::tokenize(vocab_, text); }

void ToyBackend::check_tokens(std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw DomainError("toy backend: empty token sequence");
  for (TokenId t : tokens) {
    if (t < 0 || t >= unembedding_.rows()) {
      throw DomainError("toy backend: token " + std::to_string(t) + " out of range");
    }
  }
}

Matrix ToyBackend::features(std::span<const TokenId> tokens) {
  check_tokens(tokens);
  const Index d = unembedding_.cols();
  Matrix hidden(d, static_cast<Index>(tokens.size()));
  Vector h = Vector::Zero(d);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Vector pre = recurrence_ * h + input_map_ * embedding_.row(tokens[i]).transpose();
    h = pre.array().tanh();
    hidden.col(static_cast<Index>(i)) = h;
  }
  return hidden;
}

Vector ToyBackend::logits(const Vector& hidden) const { return unembedding_ * hidden; }

std::vector<Candidate> ToyBackend::top_k(std::span<const TokenId> tokens, int k) {
  const Matrix hidden = features(tokens);
  return select_top_k(logits(hidden.col(hidden.cols() - 1)), k);
}

}  // namespace frh
