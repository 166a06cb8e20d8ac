#include "frh/concepts.hpp"

#include "frh/errors.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

namespace frh {
namespace {

ConceptVector normalized(Vector v, ConceptSource source, int members, const char* what) {
  const double n = v.norm();
  if (n == 0.0) throw DegenerateError(std::string(what) + ": zero vector");
  return ConceptVector{v / n, source, members};
}

}  // namespace

const char* to_string(ConceptSource s) {
  switch (s) {
    case ConceptSource::TokenSet:
      return "token-set";
    case ConceptSource::Counterfactual:
      return "counterfactual";
    case ConceptSource::Combined:
      return "combined";
    case ConceptSource::WordFrames:
      return "word-frames";
  }
  return "unknown";
}

ConceptVector concept_vector_from_tokens(const UnembeddingSpace& space,
                                         std::span<const TokenId> ids) {
  if (ids.empty()) throw DomainError("concept_vector_from_tokens: empty token set");
  Vector sum = Vector::Zero(space.dim());
  for (TokenId id : ids) sum += token_vector(space, id);
  return normalized(sum / static_cast<double>(ids.size()), ConceptSource::TokenSet,
                    static_cast<int>(ids.size()), "concept_vector_from_tokens");
}

ConceptVector concept_vector_counterfactual(const UnembeddingSpace& space,
                                            std::span<const std::pair<TokenId, TokenId>> pairs) {
  if (pairs.empty()) throw DomainError("concept_vector_counterfactual: no pairs");
  Vector sum = Vector::Zero(space.dim());
  for (const auto& [on, off] : pairs) sum += token_vector(space, on) - token_vector(space, off);
  return normalized(std::move(sum), ConceptSource::Counterfactual, static_cast<int>(pairs.size()),
                    "concept_vector_counterfactual");
}

ConceptVector combined_concept_vector(const ConceptVector& c1, const ConceptVector& c0) {
  if (c1.direction.size() != c0.direction.size()) {
    throw DimensionError("combined_concept_vector: dimension mismatch");
  }
  return normalized(c1.direction - c0.direction, ConceptSource::Combined,
                    c1.n_members + c0.n_members, "combined_concept_vector (identical directions)");
}

Matrix padded_word_sum(const WordSet& words, Index k) {
  std::vector<std::size_t> order(words.words.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const Word& a = words.words[i];
    const Word& b = words.words[j];
    return std::tie(a.lemma, a.language, a.tokens) < std::tie(b.lemma, b.language, b.tokens);
  });

  const Index d = words.words.empty() ? 0 : words.words.front().frame.dim();
  Matrix sum = Matrix::Zero(d, k);
  for (std::size_t i : order) {
    const Frame& f = words.words[i].frame;
    if (f.dim() != d) throw DimensionError("padded_word_sum: mixed ambient dimensions");
    const Index cols = std::min(k, f.size());
    sum.leftCols(cols) += f.matrix().leftCols(cols);
  }
  return sum;
}

ConceptFrame concept_frame(const UnembeddingSpace& space, const WordSet& words,
                           std::optional<int> k) {
  if (words.words.empty()) {
    throw DomainError("concept_frame: word set '" + words.synset_id + "' is empty");
  }
  Index width = 0;
  for (const auto& w : words.words) width = std::max(width, w.frame.size());
  if (k) {
    if (*k < 1) throw DomainError("concept_frame: k must be >= 1");
    width = *k;
  }

  const Matrix sum = padded_word_sum(words, width);
  ClosestFrame solved = closest_frame(sum, space.metric());
  if (solved.degenerate) {
    throw DegenerateError("concept_frame: padded word sum of '" + words.synset_id + "' is zero");
  }
  ConceptFrame out;
  out.frame = std::move(solved.frame);
  out.id = words.synset_id;
  out.k = static_cast<int>(width);
  out.effective_rank = solved.effective_rank;
  out.n_words = static_cast<int>(words.words.size());
  out.objective = solved.objective;
  out.source = ConceptSource::WordFrames;
  return out;
}

ConceptFrame combined_concept_frame(const ConceptFrame& b, const ConceptFrame& a,
                                    const Metric& metric) {
  if (a.frame.dim() != b.frame.dim()) {
    throw DimensionError("combined_concept_frame: parents live in different dimensions");
  }
  const Index width = std::max(a.frame.size(), b.frame.size());
  const Matrix diff = b.frame.padded_right(width).matrix() - a.frame.padded_right(width).matrix();
  if (diff.isZero(0.0)) {
    throw DegenerateError("combined_concept_frame: B - A is zero");
  }
  ClosestFrame solved = closest_frame(diff, metric);
  if (solved.degenerate) throw DegenerateError("combined_concept_frame: B - A is degenerate");

  ConceptFrame out;
  out.frame = std::move(solved.frame);
  out.id = b.id + "-" + a.id;
  out.k = static_cast<int>(width);
  out.effective_rank = solved.effective_rank;
  out.n_words = a.n_words + b.n_words;
  out.objective = solved.objective;
  out.source = ConceptSource::Combined;
  out.parents = {b.id, a.id};
  return out;
}

}  // namespace frh
