#pragma once

#include "frh/frame.hpp"
#include "frh/token_space.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace frh {

struct Lemma {
  std::string language;
  std::string text;

  friend auto operator<=>(const Lemma&, const Lemma&) = default;
};

struct Synset {
  std::string id;
  /// Ordered by (language, text); duplicates collapse.
  std::set<Lemma> lemmas;
};

/// Synsets keyed by exact id, plus the set of languages seen.
struct Lexicon {
  std::map<std::string, Synset> synsets;
  std::set<std::string> languages;

  const Synset& at(const std::string& id) const;
  std::size_t lemma_count() const;
};

/// nullopt selects every language.
using LanguageFilter = std::optional<std::set<std::string>>;

/**
 * Parses "synset_id<TAB>lang<TAB>lemma" lines. '#' comments and blank lines are
 * skipped; a trailing '\r' is stripped. Throws FormatError naming the line on
 * a wrong field count, an empty field or invalid UTF-8.
 */
Lexicon load_lexicon(std::istream& in);
Lexicon load_lexicon_file(const std::string& path);

/// Canonical TSV: sorted by synset id, language, lemma.
void save_lexicon(std::ostream& out, const Lexicon& lex);

bool is_valid_utf8(std::string_view s);

struct Word {
  std::string language;
  std::string lemma;
  TokenIds tokens;
  Frame frame;
};

struct DroppedLemma {
  std::string language;
  std::string lemma;
  /// "too_long" or "untokenizable"
  std::string reason;
};

struct WordSet {
  std::string synset_id;
  std::size_t max_tokens = 0;
  /// Sorted by (lemma, language).
  std::vector<Word> words;
  std::vector<DroppedLemma> dropped;
};

/**
 * Word frames for one synset. Lemmas longer than max_tokens or that fail
 * tokenization are dropped and listed in WordSet::dropped.
 * Throws NotFoundError for an unknown id.
 */
WordSet synset_word_set(const Lexicon& lex, const UnembeddingSpace& space, const Vocab& vocab,
                        const std::string& id, const LanguageFilter& langs,
                        std::size_t max_tokens = 4);

struct TokenCountHistogram {
  /// token count -> number of distinct (language, lemma) pairs
  std::map<std::size_t, std::size_t> counts;
  std::size_t untokenizable = 0;
  /// Nearest-rank 75th percentile; empty when no lemma tokenizes.
  std::optional<std::size_t> p75;
};

TokenCountHistogram token_count_histogram(const Lexicon& lex, const Vocab& vocab,
                                          const LanguageFilter& langs);

}  // namespace frh
