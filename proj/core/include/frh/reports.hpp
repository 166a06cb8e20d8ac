#pragma once

#include "frh/concepts.hpp"
#include "frh/lexicon.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace frh {

/// Minimal RFC 4180 writer: comma separator, '.' decimals, shortest
/// round-trip doubles, fields quoted only when needed.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(const std::vector<std::string>& fields);
  const std::string& str() const { return text_; }

  static std::string field(double v);
  static std::string field(std::int64_t v);
  static std::string field(std::size_t v);
  static std::string field(int v) { return field(static_cast<std::int64_t>(v)); }
  static std::string field(const std::string& s) { return s; }

 private:
  void append(const std::vector<std::string>& fields);

  std::size_t width_;
  std::string text_;
};

struct RankSummaryRow {
  std::size_t token_count = 0;
  std::size_t n_words = 0;
  double mean_relative_rank = 0.0;
  double full_rank_fraction = 0.0;
};

struct RankReportResult {
  /// synset,lang,lemma,token_count,rank,relative_rank
  std::string csv;
  /// token_count,n_words,mean_relative_rank,full_rank_fraction
  std::string summary_csv;
  std::vector<RankSummaryRow> summary;
  std::size_t n_words = 0;
  std::size_t n_dropped = 0;
  double full_rank_fraction = 0.0;
};

/// Numerical rank of every word frame (lemmas up to max_tokens) in the lexicon.
RankReportResult rank_report(const Lexicon& lex, const Vocab& vocab, const UnembeddingSpace& space,
                             std::size_t max_tokens, const LanguageFilter& langs = std::nullopt);

struct ClassStats {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double sem = 0.0;
};

ClassStats class_stats(const std::vector<double>& values);

/// (mean_a - mean_b) / pooled sample standard deviation.
double pooled_separation(const ClassStats& a, const ClassStats& b);

struct ProjectionReportResult {
  /// concept,class,word,token_count,projection
  std::string csv;
  /// class,n,mean,stddev,sem
  std::string summary_csv;
  ClassStats member;
  ClassStats random;
  std::vector<std::string> skipped;
};

/**
 * Projections of member word frames and of random frames onto each concept.
 * Random frame i for a concept copies the token count of member word
 * (i mod n_members) and draws token ids uniformly with a per-concept stream
 * derived from `seed` and the concept id. Concepts with no usable member
 * words in the lexicon are skipped.
 */
ProjectionReportResult projection_report(const Lexicon& lex, const Vocab& vocab,
                                         const UnembeddingSpace& space,
                                         const std::vector<ConceptFrame>& concepts,
                                         std::size_t n_random, std::uint64_t seed,
                                         std::size_t max_tokens = 4,
                                         const LanguageFilter& langs = std::nullopt);

struct HistogramReportResult {
  /// token_count,lemma_count
  std::string csv;
  TokenCountHistogram histogram;
};

HistogramReportResult histogram_report(const Lexicon& lex, const Vocab& vocab,
                                       const LanguageFilter& langs = std::nullopt);

}  // namespace frh
