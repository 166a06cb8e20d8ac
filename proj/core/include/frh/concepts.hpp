#pragma once

#include "frh/frame.hpp"
#include "frh/lexicon.hpp"
#include "frh/token_space.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace frh {

enum class ConceptSource { TokenSet, Counterfactual, Combined, WordFrames };

const char* to_string(ConceptSource s);

/// A unit (Euclidean) direction in the unembedding space.
struct ConceptVector {
  Vector direction;
  ConceptSource source = ConceptSource::TokenSet;
  int n_members = 0;
};

/// Normalized mean of the debiased token vectors. DegenerateError if the mean is zero.
ConceptVector concept_vector_from_tokens(const UnembeddingSpace& space,
                                         std::span<const TokenId> ids);

/// normalize(sum_i u(first_i) - u(second_i)).
ConceptVector concept_vector_counterfactual(const UnembeddingSpace& space,
                                            std::span<const std::pair<TokenId, TokenId>> pairs);

/// normalize(c1 - c0), the direction "c0 => c1".
ConceptVector combined_concept_vector(const ConceptVector& c1, const ConceptVector& c0);

struct ConceptFrame {
  /// Euclidean-orthonormal columns.
  Frame frame;
  std::string id;
  /// Requested width before rank truncation.
  int k = 0;
  int effective_rank = 0;
  int n_words = 0;
  double objective = 0.0;
  ConceptSource source = ConceptSource::WordFrames;
  /// (B, A) for combined frames.
  std::vector<std::string> parents;
};

/// Padded word sum: each frame right-padded to k columns (or cut to its first
/// k), summed in canonical (lemma, language, tokens) order.
Matrix padded_word_sum(const WordSet& words, Index k);

/**
 * Frechet mean of a word set under the asymmetric Procrustes distance:
 * closest_frame of the padded word sum. k defaults to the longest word.
 * Throws DomainError on an empty set and DegenerateError on a zero sum.
 */
ConceptFrame concept_frame(const UnembeddingSpace& space, const WordSet& words,
                           std::optional<int> k = std::nullopt);

/**
 * Frame closest to B - A (the contrast "A => B") under the trace objective
 * with metric M. The narrower parent is right-padded with zero columns.
 */
ConceptFrame combined_concept_frame(const ConceptFrame& b, const ConceptFrame& a,
                                    const Metric& metric);

}  // namespace frh
