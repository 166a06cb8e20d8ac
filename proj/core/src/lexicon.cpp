#include "frh/lexicon.hpp"

#include "frh/errors.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <tuple>

namespace frh {
namespace {

bool selected(const LanguageFilter& langs, const std::string& lang) {
  return !langs || langs->count(lang) > 0;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

const Synset& Lexicon::at(const std::string& id) const {
  auto it = synsets.find(id);
  if (it == synsets.end()) throw NotFoundError("unknown synset '" + id + "'");
  return it->second;
}

std::size_t Lexicon::lemma_count() const {
  std::size_t n = 0;
  for (const auto& [id, s] : synsets) n += s.lemmas.size();
  return n;
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xe0) == 0xc0) {
      extra = 1;
      cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
      extra = 2;
      cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xc0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3f);
    }
    // overlong forms, surrogates, out of range
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
        (cp >= 0xd800 && cp <= 0xdfff) || cp > 0x10ffff) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

Lexicon load_lexicon(std::istream& in) {
  Lexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!is_valid_utf8(line)) {
      throw FormatError("lexicon line " + std::to_string(lineno) + ": invalid UTF-8");
    }
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw FormatError("lexicon line " + std::to_string(lineno) + ": expected 3 fields, got " +
                        std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw FormatError("lexicon line " + std::to_string(lineno) + ": empty field");
    }
    Synset& s = lex.synsets[fields[0]];
    s.id = fields[0];
    s.lemmas.insert(Lemma{fields[1], fields[2]});
    lex.languages.insert(fields[1]);
  }
  return lex;
}

Lexicon load_lexicon_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open lexicon " + path);
  return load_lexicon(in);
}

void save_lexicon(std::ostream& out, const Lexicon& lex) {
  for (const auto& [id, s] : lex.synsets) {
    for (const auto& l : s.lemmas) out << id << '\t' << l.language << '\t' << l.text << '\n';
  }
}

WordSet synset_word_set(const Lexicon& lex, const UnembeddingSpace& space, const Vocab& vocab,
                        const std::string& id, const LanguageFilter& langs,
                        std::size_t max_tokens) {
  const Synset& synset = lex.at(id);
  WordSet ws;
  ws.synset_id = id;
  ws.max_tokens = max_tokens;
  for (const auto& lemma : synset.lemmas) {
    if (!selected(langs, lemma.language)) continue;
    TokenIds ids;
    try {
      ids = tokenize(vocab, lemma.text);
    } catch (const TokenizeError&) {
      ws.dropped.push_back({lemma.language, lemma.text, "untokenizable"});
      continue;
    }
    if (ids.size() > max_tokens || static_cast<Index>(ids.size()) > space.dim()) {
      ws.dropped.push_back({lemma.language, lemma.text, "too_long"});
      continue;
    }
    Frame f = word_frame(space, ids);
    ws.words.push_back(Word{lemma.language, lemma.text, std::move(ids), std::move(f)});
  }
  std::stable_sort(ws.words.begin(), ws.words.end(), [](const Word& a, const Word& b) {
    return std::tie(a.lemma, a.language) < std::tie(b.lemma, b.language);
  });
  return ws;
}

TokenCountHistogram token_count_histogram(const Lexicon& lex, const Vocab& vocab,
                                          const LanguageFilter& langs) {
  std::set<Lemma> unique;
  for (const auto& [id, s] : lex.synsets) {
    for (const auto& l : s.lemmas) {
      if (selected(langs, l.language)) unique.insert(l);
    }
  }
  TokenCountHistogram h;
  std::size_t total = 0;
  for (const auto& l : unique) {
    try {
      ++h.counts[tokenize(vocab, l.text).size()];
      ++total;
    } catch (const TokenizeError&) {
      ++h.untokenizable;
    }
  }
  std::size_t cumulative = 0;
  for (const auto& [count, n] : h.counts) {
    cumulative += n;
    // cumulative >= 0.75 * total, in integers
    if (4 * cumulative >= 3 * total) {
      h.p75 = count;
      break;
    }
  }
  return h;
}

}  // namespace frh
