#pragma once

#include "frh/backend.hpp"
#include "frh/concepts.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace frh {

/// Projection uses raw hidden columns; Correlation M-normalizes them
/// (zero-padded positions then contribute nothing).
enum class ProbeStatistic { Projection, Correlation };

/// Scores the last effective_rank hidden states (columns of `hidden`) against the concept.
double probe_hidden(const ConceptFrame& target, const Matrix& hidden, const Metric& metric,
                    ProbeStatistic statistic = ProbeStatistic::Projection);

/// probe_hidden on backend.features(tokens).
double probe(const ConceptFrame& target, Backend& backend, std::span<const TokenId> tokens,
             const Metric& metric, ProbeStatistic statistic = ProbeStatistic::Projection);

struct StepRecord {
  TokenId chosen = 0;
  std::vector<Candidate> candidates;
  /// Probe score of tokens ++ [candidate_i]; empty when no concept is probed.
  std::vector<double> scores;
  /// Score of the chosen extension.
  std::optional<double> projection;
};

/// Index of the best score; ties go to the lower token id.
std::size_t argmax_score(const std::vector<Candidate>& candidates, const std::vector<double>& scores);

/**
 * One Top-k Concept-Guided Decoding step: score every top-k candidate by
 * probing the full extended sequence and keep the best.
 */
StepRecord guided_step(Backend& backend, const ConceptFrame& target, std::span<const TokenId> tokens,
                       int k, const Metric& metric,
                       ProbeStatistic statistic = ProbeStatistic::Projection);

struct GenerationTrace {
  TokenIds prompt_tokens;
  std::vector<StepRecord> steps;
  std::string concept_id;
  int k = 0;
  std::uint64_t seed = 0;
  bool guided = false;
  /// "steps", "eos" or "error"
  std::string stop_reason = "steps";
  std::string error;

  TokenIds tokens() const;
  std::optional<double> final_projection() const;
};

/// Repeats guided_step n_steps times (or until EOS / backend failure, which
/// ends the run and keeps the partial trace).
GenerationTrace guided_generate(Backend& backend, const ConceptFrame& target, TokenIds prompt,
                                int k, int n_steps, const Metric& metric,
                                ProbeStatistic statistic = ProbeStatistic::Projection);

/// Top-k sampling baseline: uniform choice among the k candidates using
/// LcgSampler(seed). When probe_concept is given every candidate is scored so
/// the trace carries the same projection series as a guided run.
GenerationTrace unguided_generate(Backend& backend, TokenIds prompt, int k, int n_steps,
                                  std::uint64_t seed, const ConceptFrame* probe_concept,
                                  const Metric& metric,
                                  ProbeStatistic statistic = ProbeStatistic::Projection);

struct RelativeProjection {
  std::vector<double> series;
  double final_value = 0.0;
};

/// Per-step guided minus unguided projection.
RelativeProjection relative_projection(const GenerationTrace& guided, const GenerationTrace& unguided);

/// Header object {prompt, concept, k, seed, guided} then one object per step,
/// then a footer {stop_reason, error}.
void write_trace_jsonl(std::ostream& out, const GenerationTrace& trace);

}  // namespace frh
