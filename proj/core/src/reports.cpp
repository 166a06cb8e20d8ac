#include "frh/reports.hpp"

#include "frh/errors.hpp"
#include "frh/random.hpp"

#include <fmt/format.h>

#include <cmath>
#include <map>

namespace frh {

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { append(header); }

void CsvWriter::add_row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw DomainError("csv: row width does not match header");
  append(fields);
}

void CsvWriter::append(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) text_ += ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      text_ += f;
      continue;
    }
    text_ += '"';
    for (char c : f) {
      if (c == '"') text_ += '"';
      text_ += c;
    }
    text_ += '"';
  }
  text_ += '\n';
}

std::string CsvWriter::field(double v) { return fmt::format("{}", v); }
std::string CsvWriter::field(std::int64_t v) { return fmt::format("{}", v); }
std::string CsvWriter::field(std::size_t v) { return fmt::format("{}", v); }

RankReportResult rank_report(const Lexicon& lex, const Vocab& vocab, const UnembeddingSpace& space,
                             std::size_t max_tokens, const LanguageFilter& langs) {
  RankReportResult out;
  CsvWriter rows({"synset", "lang", "lemma", "token_count", "rank", "relative_rank"});
  struct Acc {
    std::size_t n = 0;
    double rel_sum = 0.0;
    std::size_t full = 0;
  };
  std::map<std::size_t, Acc> by_count;
  std::size_t full_total = 0;

  for (const auto& [id, synset] : lex.synsets) {
    const WordSet ws = synset_word_set(lex, space, vocab, id, langs, max_tokens);
    out.n_dropped += ws.dropped.size();
    for (const Word& w : ws.words) {
      const RankReport r = frh::rank_report(w.frame);
      rows.add_row({id, w.language, w.lemma, CsvWriter::field(r.token_count),
                    CsvWriter::field(r.numerical_rank), CsvWriter::field(r.relative_rank)});
      Acc& acc = by_count[static_cast<std::size_t>(r.token_count)];
      ++acc.n;
      acc.rel_sum += r.relative_rank;
      const bool full = r.numerical_rank == r.token_count;
      acc.full += full ? 1 : 0;
      full_total += full ? 1 : 0;
      ++out.n_words;
    }
  }

  CsvWriter summary({"token_count", "n_words", "mean_relative_rank", "full_rank_fraction"});
  for (const auto& [count, acc] : by_count) {
    RankSummaryRow row{count, acc.n, acc.rel_sum / static_cast<double>(acc.n),
                       static_cast<double>(acc.full) / static_cast<double>(acc.n)};
    summary.add_row({CsvWriter::field(row.token_count), CsvWriter::field(row.n_words),
                     CsvWriter::field(row.mean_relative_rank),
                     CsvWriter::field(row.full_rank_fraction)});
    out.summary.push_back(row);
  }
  out.full_rank_fraction =
      out.n_words == 0 ? 0.0 : static_cast<double>(full_total) / static_cast<double>(out.n_words);
  out.csv = rows.str();
  out.summary_csv = summary.str();
  return out;
}

ClassStats class_stats(const std::vector<double>& values) {
  ClassStats s;
  s.n = values.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.sem = s.stddev / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

double pooled_separation(const ClassStats& a, const ClassStats& b) {
  if (a.n + b.n <= 2) throw DomainError("pooled_separation: not enough samples");
  const double pooled_var =
      (static_cast<double>(a.n - 1) * a.stddev * a.stddev +
       static_cast<double>(b.n - 1) * b.stddev * b.stddev) /
      static_cast<double>(a.n + b.n - 2);
  return (a.mean - b.mean) / std::sqrt(pooled_var);
}

ProjectionReportResult projection_report(const Lexicon& lex, const Vocab& vocab,
                                         const UnembeddingSpace& space,
                                         const std::vector<ConceptFrame>& concepts,
                                         std::size_t n_random, std::uint64_t seed,
                                         std::size_t max_tokens, const LanguageFilter& langs) {
  ProjectionReportResult out;
  CsvWriter rows({"concept", "class", "word", "token_count", "projection"});
  std::vector<double> member_values;
  std::vector<double> random_values;
  const Metric& metric = space.metric();

  for (const ConceptFrame& target : concepts) {
    if (lex.synsets.count(target.id) == 0) {
      out.skipped.push_back(target.id);
      continue;
    }
    const WordSet ws = synset_word_set(lex, space, vocab, target.id, langs, max_tokens);
    if (ws.words.empty() || target.frame.is_null()) {
      out.skipped.push_back(target.id);
      continue;
    }
    for (const Word& w : ws.words) {
      const double p = frame_projection(metric, target.frame, w.frame);
      rows.add_row({target.id, "member", w.lemma, CsvWriter::field(w.tokens.size()),
                    CsvWriter::field(p)});
      member_values.push_back(p);
    }
    Rng rng(derive_seed(seed, "projection-report/" + target.id));
    for (std::size_t i = 0; i < n_random; ++i) {
      const std::size_t len = ws.words[i % ws.words.size()].tokens.size();
      TokenIds ids(len);
      for (auto& id : ids) id = static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(space.vocab_size())));
      const double p = frame_projection(metric, target.frame, word_frame(space, ids));
      rows.add_row({target.id, "random", "random#" + std::to_string(i), CsvWriter::field(len),
                    CsvWriter::field(p)});
      random_values.push_back(p);
    }
  }

  out.member = class_stats(member_values);
  out.random = class_stats(random_values);
  CsvWriter summary({"class", "n", "mean", "stddev", "sem"});
  for (const auto& [name, s] : {std::pair<std::string, ClassStats>{"member", out.member},
                                std::pair<std::string, ClassStats>{"random", out.random}}) {
    if (s.n == 0) continue;
    summary.add_row({name, CsvWriter::field(s.n), CsvWriter::field(s.mean),
                     CsvWriter::field(s.stddev), CsvWriter::field(s.sem)});
  }
  out.csv = rows.str();
  out.summary_csv = summary.str();
  return out;
}

HistogramReportResult histogram_report(const Lexicon& lex, const Vocab& vocab,
                                       const LanguageFilter& langs) {
  HistogramReportResult out;
  out.histogram = token_count_histogram(lex, vocab, langs);
  CsvWriter rows({"token_count", "lemma_count"});
  for (const auto& [count, n] : out.histogram.counts) {
    rows.add_row({CsvWriter::field(count), CsvWriter::field(n)});
  }
  out.csv = rows.str();
  return out;
}

}  // namespace frh
