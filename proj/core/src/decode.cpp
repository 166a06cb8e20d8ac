#include "frh/decode.hpp"

#include "frh/errors.hpp"
#include "frh/random.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <ostream>

namespace frh {
using nlohmann::json;

double probe_hidden(const ConceptFrame& target, const Matrix& hidden, const Metric& metric,
                    ProbeStatistic statistic) {
  if (hidden.cols() == 0) throw DomainError("probe: empty hidden sequence");
  if (target.frame.is_null()) throw DomainError("probe: null concept frame");
  const FeatureFrame ff = feature_frame(hidden, target.frame.size());
  if (statistic == ProbeStatistic::Projection) {
    return frame_projection(metric, target.frame, ff.frame);
  }
  Matrix cols = ff.frame.matrix();
  for (Index j = 0; j < cols.cols(); ++j) {
    const double n = std::sqrt(cols.col(j).dot(metric.matrix() * cols.col(j)));
    if (n > 0.0) cols.col(j) /= n;
  }
  const Frame normalized_concept = normalize_columns(metric, target.frame);
  return frame_projection(metric, normalized_concept, Frame(std::move(cols)));
}

double probe(const ConceptFrame& target, Backend& backend, std::span<const TokenId> tokens,
             const Metric& metric, ProbeStatistic statistic) {
  if (tokens.empty()) throw DomainError("probe: empty token sequence");
  return probe_hidden(target, backend.features(tokens), metric, statistic);
}

std::size_t argmax_score(const std::vector<Candidate>& candidates, const std::vector<double>& scores) {
  if (candidates.empty() || candidates.size() != scores.size()) {
    throw DomainError("argmax_score: scores must match candidates");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best] ||
        (scores[i] == scores[best] && candidates[i].token < candidates[best].token)) {
      best = i;
    }
  }
  return best;
}

namespace {

std::vector<double> score_candidates(Backend& backend, const ConceptFrame& target,
                                     std::span<const TokenId> tokens,
                                     const std::vector<Candidate>& candidates, const Metric& metric,
                                     ProbeStatistic statistic) {
  TokenIds extended(tokens.begin(), tokens.end());
  extended.push_back(0);
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const Candidate& c : candidates) {
    extended.back() = c.token;
    scores.push_back(probe(target, backend, extended, metric, statistic));
  }
  return scores;
}

void require_prompt(const TokenIds& prompt, int k, int n_steps) {
  if (prompt.empty()) throw DomainError("generation needs a non-empty prompt");
  if (k < 1) throw DomainError("generation needs k >= 1");
  if (n_steps < 1) throw DomainError("generation needs n_steps >= 1");
}

}  // namespace

StepRecord guided_step(Backend& backend, const ConceptFrame& target, std::span<const TokenId> tokens,
                       int k, const Metric& metric, ProbeStatistic statistic) {
  if (k < 1) throw DomainError("guided_step: k must be >= 1");
  StepRecord rec;
  rec.candidates = backend.top_k(tokens, k);
  rec.scores = score_candidates(backend, target, tokens, rec.candidates, metric, statistic);
  const std::size_t best = argmax_score(rec.candidates, rec.scores);
  rec.chosen = rec.candidates[best].token;
  rec.projection = rec.scores[best];
  return rec;
}

TokenIds GenerationTrace::tokens() const {
  TokenIds out = prompt_tokens;
  for (const auto& s : steps) out.push_back(s.chosen);
  return out;
}

std::optional<double> GenerationTrace::final_projection() const {
  if (steps.empty()) return std::nullopt;
  return steps.back().projection;
}

GenerationTrace guided_generate(Backend& backend, const ConceptFrame& target, TokenIds prompt,
                                int k, int n_steps, const Metric& metric,
                                ProbeStatistic statistic) {
  require_prompt(prompt, k, n_steps);
  GenerationTrace trace;
  trace.prompt_tokens = prompt;
  trace.concept_id = target.id;
  trace.k = k;
  trace.guided = true;
  TokenIds tokens = std::move(prompt);
  try {
    const auto eos = backend.meta().eos;
    for (int step = 0; step < n_steps; ++step) {
      StepRecord rec = guided_step(backend, target, tokens, k, metric, statistic);
      tokens.push_back(rec.chosen);
      const bool stop = eos && rec.chosen == *eos;
      trace.steps.push_back(std::move(rec));
      if (stop) {
        trace.stop_reason = "eos";
        break;
      }
    }
  } catch (const Error& e) {
    trace.stop_reason = "error";
    trace.error = e.what();
  }
  return trace;
}

GenerationTrace unguided_generate(Backend& backend, TokenIds prompt, int k, int n_steps,
                                  std::uint64_t seed, const ConceptFrame* probe_concept,
                                  const Metric& metric, ProbeStatistic statistic) {
  require_prompt(prompt, k, n_steps);
  GenerationTrace trace;
  trace.prompt_tokens = prompt;
  trace.concept_id = probe_concept ? probe_concept->id : std::string();
  trace.k = k;
  trace.seed = seed;
  trace.guided = false;
  LcgSampler sampler(seed);
  TokenIds tokens = std::move(prompt);
  try {
    const auto eos = backend.meta().eos;
    for (int step = 0; step < n_steps; ++step) {
      StepRecord rec;
      rec.candidates = backend.top_k(tokens, k);
      const std::size_t pick = sampler.pick(rec.candidates.size());
      rec.chosen = rec.candidates[pick].token;
      if (probe_concept) {
        rec.scores = score_candidates(backend, *probe_concept, tokens, rec.candidates, metric, statistic);
        rec.projection = rec.scores[pick];
      }
      tokens.push_back(rec.chosen);
      const bool stop = eos && rec.chosen == *eos;
      trace.steps.push_back(std::move(rec));
      if (stop) {
        trace.stop_reason = "eos";
        break;
      }
    }
  } catch (const Error& e) {
    trace.stop_reason = "error";
    trace.error = e.what();
  }
  return trace;
}

RelativeProjection relative_projection(const GenerationTrace& guided, const GenerationTrace& unguided) {
  if (guided.steps.size() != unguided.steps.size()) {
    throw DomainError("relative_projection: traces have different step counts");
  }
  if (guided.concept_id != unguided.concept_id) {
    throw DomainError("relative_projection: traces probe different concepts");
  }
  RelativeProjection out;
  for (std::size_t i = 0; i < guided.steps.size(); ++i) {
    const auto& g = guided.steps[i].projection;
    const auto& u = unguided.steps[i].projection;
    if (!g || !u) throw DomainError("relative_projection: step without a projection");
    out.series.push_back(*g - *u);
  }
  if (!out.series.empty()) out.final_value = out.series.back();
  return out;
}

void write_trace_jsonl(std::ostream& out, const GenerationTrace& trace) {
  out << json{{"prompt", trace.prompt_tokens},
              {"concept", trace.concept_id},
              {"k", trace.k},
              {"seed", trace.seed},
              {"guided", trace.guided}}
             .dump()
      << '\n';
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const StepRecord& s = trace.steps[i];
    json cands = json::array();
    for (const auto& c : s.candidates) cands.push_back({{"t", c.token}, {"l", c.logit}});
    out << json{{"step", i},
                {"chosen", s.chosen},
                {"candidates", std::move(cands)},
                {"scores", s.scores},
                {"projection", s.projection ? json(*s.projection) : json(nullptr)}}
               .dump()
        << '\n';
  }
  out << json{{"end", true}, {"stop_reason", trace.stop_reason}, {"error", trace.error}}.dump()
      << '\n';
}

}  // namespace frh
