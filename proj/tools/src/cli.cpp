#include "frh/cli.hpp"

#include "frh/backend.hpp"
#include "frh/concepts.hpp"
#include "frh/decode.hpp"
#include "frh/errors.hpp"
#include "frh/lexicon.hpp"
#include "frh/protocol.hpp"
#include "frh/random.hpp"
#include "frh/reports.hpp"
#include "frh/store.hpp"
#include "frh/tensor_io.hpp"
#include "frh/token_space.hpp"

#include <CLI/CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace frh::cli {
namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string space;
  std::string tensor;
  std::string vocab;
  std::string lexicon;
  std::string store;
  std::string backend;
  std::string concept_id;
  std::string combined;
  std::string prompt;
  std::string out;
  std::string langs;
  std::vector<std::string> only;
  int k = 3;
  int steps = 20;
  std::uint64_t seed = 0;
  int max_tokens = 4;
  double lambda = 1e-6;
  int n_random = 100;
  int port = -1;
  bool baseline = false;
  bool normalized = false;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw UsageError(msg);
}

void require_file(const std::string& path, const char* flag) {
  require(!path.empty(), std::string(flag) + " is required");
  if (!fs::exists(path)) throw NotFoundError(std::string(flag) + ": " + path + " does not exist");
}

LanguageFilter parse_langs(const std::string& csv) {
  if (csv.empty()) return std::nullopt;
  std::set<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(item);
  }
  require(!out.empty(), "--langs lists no language");
  return out;
}

void write_output(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path);
  f << text;
  if (!f) throw Error("write failed: " + path);
}

ConceptFrame resolve_concept(const RunConfig& cfg, const Metric& metric) {
  require(!cfg.store.empty(), "--store is required with a concept");
  const fs::path store(cfg.store);
  if (!fs::is_directory(store)) throw NotFoundError("concept store " + cfg.store + " not found");
  if (!cfg.concept_id.empty()) return load_concept(store, cfg.concept_id);
  const std::vector<std::string> ids = list_concepts(store);
  if (std::binary_search(ids.begin(), ids.end(), cfg.combined)) return load_concept(store, cfg.combined);
  const auto parts = split_combined(cfg.combined, [&](const std::string& id) {
    return std::binary_search(ids.begin(), ids.end(), id);
  });
  if (!parts) throw NotFoundError("combined concept '" + cfg.combined + "': parents not in store");
  return combined_concept_frame(load_concept(store, parts->first), load_concept(store, parts->second),
                                metric);
}

int cmd_export_toy(const RunConfig& cfg, std::ostream& out) {
  require(!cfg.backend.empty(), "--backend toy:SEED:D:V is required");
  require(!cfg.out.empty(), "--out DIR is required");
  require(cfg.backend.rfind("toy:", 0) == 0, "export-toy needs a toy backend spec");
  const auto backend = open_backend(cfg.backend);
  const auto& toy = dynamic_cast<const ToyBackend&>(*backend);
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  write_tensor_file(dir / "unembedding.frht", toy.unembedding());
  toy.vocab().save_file(dir / "vocab.txt");
  fmt::print(out, "exported d={} V={} to {}\n", toy.unembedding().cols(), toy.unembedding().rows(),
             cfg.out);
  return kOk;
}

int cmd_build_space(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.tensor, "--tensor");
  require_file(cfg.vocab, "--vocab");
  require(!cfg.space.empty(), "--space DIR is required");
  require(cfg.lambda >= 0.0, "--lambda must be >= 0");
  Matrix wu = read_tensor_file(cfg.tensor);
  Vocab vocab = Vocab::load_file(cfg.vocab);
  if (static_cast<Index>(vocab.size()) != wu.rows()) {
    throw FormatError(fmt::format("vocab has {} entries but the tensor has {} rows", vocab.size(),
                                  wu.rows()));
  }
  const UnembeddingSpace space(std::move(wu), cfg.lambda);
  write_space_bundle(cfg.space, space, vocab);
  fmt::print(out, "d={} V={} lambda={}\n", space.dim(), space.vocab_size(), space.lambda());
  return kOk;
}

void log_concept(std::ostream& out, const ConceptFrame& c) {
  out << nlohmann::json{{"id", c.id}, {"n_words", c.n_words}, {"effective_rank", c.effective_rank}}.dump()
      << '\n';
}

int cmd_build_concepts(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(!cfg.space.empty(), "--space DIR is required");
  require_file(cfg.lexicon, "--lexicon");
  require(!cfg.store.empty(), "--store DIR is required");
  require(cfg.max_tokens >= 1, "--max-tokens must be >= 1");
  const SpaceBundle bundle = load_space_bundle(cfg.space);
  const Lexicon lex = load_lexicon_file(cfg.lexicon);
  const LanguageFilter langs = parse_langs(cfg.langs);
  const auto max_tokens = static_cast<std::size_t>(cfg.max_tokens);
  const fs::path store(cfg.store);

  std::map<std::string, ConceptFrame> built;
  auto build = [&](const std::string& id, bool explicit_request) -> const ConceptFrame* {
    if (auto it = built.find(id); it != built.end()) return &it->second;
    const WordSet ws = synset_word_set(lex, bundle.space, bundle.vocab, id, langs, max_tokens);
    if (ws.words.empty()) {
      const std::string msg = fmt::format("skip {}: no lemma within {} tokens", id, max_tokens);
      if (explicit_request) throw DegenerateError(msg);
      err << msg << '\n';
      return nullptr;
    }
    ConceptFrame c = concept_frame(bundle.space, ws);
    c.id = id;
    save_concept(store, c);
    log_concept(out, c);
    return &built.emplace(id, std::move(c)).first->second;
  };

  fs::create_directories(store);
  const bool selective = !cfg.only.empty() || !cfg.combined.empty();
  if (!selective) {
    for (const auto& [id, synset] : lex.synsets) build(id, false);
  }
  for (const std::string& id : cfg.only) {
    lex.at(id);
    build(id, true);
  }
  if (!cfg.combined.empty()) {
    const auto parts = split_combined(cfg.combined, [&](const std::string& id) {
      return lex.synsets.count(id) > 0;
    });
    if (!parts) throw NotFoundError("combined selector '" + cfg.combined + "' names unknown synsets");
    const ConceptFrame* b = build(parts->first, true);
    const ConceptFrame* a = build(parts->second, true);
    const ConceptFrame c = combined_concept_frame(*b, *a, bundle.space.metric());
    save_concept(store, c);
    log_concept(out, c);
  }
  return kOk;
}

int cmd_report_rank(const RunConfig& cfg, std::ostream& out) {
  require(!cfg.space.empty(), "--space DIR is required");
  require_file(cfg.lexicon, "--lexicon");
  require(!cfg.out.empty(), "--out PATH is required");
  require(cfg.max_tokens >= 1, "--max-tokens must be >= 1");
  const SpaceBundle bundle = load_space_bundle(cfg.space);
  const Lexicon lex = load_lexicon_file(cfg.lexicon);
  const RankReportResult r = rank_report(lex, bundle.vocab, bundle.space,
                                         static_cast<std::size_t>(cfg.max_tokens),
                                         parse_langs(cfg.langs));
  write_output(cfg.out, r.csv);
  write_output(cfg.out + ".summary.csv", r.summary_csv);
  fmt::print(out, "words={} dropped={} full_rank_fraction={}\n", r.n_words, r.n_dropped,
             r.full_rank_fraction);
  return kOk;
}

int cmd_report_projection(const RunConfig& cfg, std::ostream& out) {
  require(!cfg.space.empty(), "--space DIR is required");
  require_file(cfg.lexicon, "--lexicon");
  require(!cfg.store.empty(), "--store DIR is required");
  require(!cfg.out.empty(), "--out PATH is required");
  require(cfg.n_random >= 0, "--n-random must be >= 0");
  const SpaceBundle bundle = load_space_bundle(cfg.space);
  const Lexicon lex = load_lexicon_file(cfg.lexicon);
  const fs::path store(cfg.store);
  if (!fs::is_directory(store)) throw NotFoundError("concept store " + cfg.store + " not found");
  std::vector<std::string> ids = cfg.only;
  if (!cfg.concept_id.empty()) ids.push_back(cfg.concept_id);
  if (ids.empty()) ids = list_concepts(store);
  std::vector<ConceptFrame> concepts;
  for (const auto& id : ids) concepts.push_back(load_concept(store, id));

  const ProjectionReportResult r = projection_report(
      lex, bundle.vocab, bundle.space, concepts, static_cast<std::size_t>(cfg.n_random),
      derive_seed(cfg.seed, "report/projection"), static_cast<std::size_t>(cfg.max_tokens),
      parse_langs(cfg.langs));
  write_output(cfg.out, r.csv);
  write_output(cfg.out + ".summary.csv", r.summary_csv);
  fmt::print(out, "member n={} mean={} sem={}; random n={} mean={} sem={}", r.member.n,
             r.member.mean, r.member.sem, r.random.n, r.random.mean, r.random.sem);
  if (r.member.n + r.random.n > 2 && r.member.n > 0 && r.random.n > 0) {
    fmt::print(out, "; separation={}", pooled_separation(r.member, r.random));
  }
  fmt::print(out, "; skipped={}\n", r.skipped.size());
  return kOk;
}

int cmd_report_histogram(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.lexicon, "--lexicon");
  require(!cfg.out.empty(), "--out PATH is required");
  Vocab vocab;
  if (!cfg.vocab.empty()) {
    require_file(cfg.vocab, "--vocab");
    vocab = Vocab::load_file(cfg.vocab);
  } else {
    require(!cfg.space.empty(), "--vocab FILE or --space DIR is required");
    vocab = load_space_bundle(cfg.space).vocab;
  }
  const Lexicon lex = load_lexicon_file(cfg.lexicon);
  const HistogramReportResult r = histogram_report(lex, vocab, parse_langs(cfg.langs));
  write_output(cfg.out, r.csv);
  std::size_t total = 0;
  for (const auto& [count, n] : r.histogram.counts) total += n;
  fmt::print(out, "lemmas={} untokenizable={} p75={}\n", total, r.histogram.untokenizable,
             r.histogram.p75 ? std::to_string(*r.histogram.p75) : std::string("none"));
  return kOk;
}

int cmd_generate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(!cfg.backend.empty(), "--backend SPEC is required");
  require(cfg.k >= 1, "--k must be >= 1");
  require(cfg.steps >= 1, "--steps must be >= 1");
  require(cfg.concept_id.empty() || cfg.combined.empty(), "--concept and --combined are exclusive");
  const bool probed = !cfg.concept_id.empty() || !cfg.combined.empty();
  require(!cfg.baseline || probed, "--baseline needs --concept or --combined");

  std::optional<SpaceBundle> bundle;
  if (probed) {
    require(!cfg.space.empty(), "--space DIR is required with a concept");
    bundle = load_space_bundle(cfg.space);
  }
  std::optional<ConceptFrame> target;
  if (probed) target = resolve_concept(cfg, bundle->space.metric());

  const auto backend = open_backend(cfg.backend);
  const BackendMeta meta = backend->meta();
  if (bundle) validate_meta(meta, bundle->space);

  TokenIds prompt;
  if (!cfg.prompt.empty()) prompt = backend->tokenize(cfg.prompt);
  if (meta.bos && (prompt.empty() || prompt.front() != *meta.bos)) prompt.insert(prompt.begin(), *meta.bos);
  require(!prompt.empty(), "backend has no BOS token; pass --prompt");

  const ProbeStatistic stat = cfg.normalized ? ProbeStatistic::Correlation : ProbeStatistic::Projection;
  const std::uint64_t sampler_seed = derive_seed(cfg.seed, "generate/sampler");
  const Metric identity = Metric::identity(meta.d);
  const Metric& metric = bundle ? bundle->space.metric() : identity;

  GenerationTrace trace = target ? guided_generate(*backend, *target, prompt, cfg.k, cfg.steps, metric, stat)
                                 : unguided_generate(*backend, prompt, cfg.k, cfg.steps, sampler_seed,
                                                     nullptr, metric, stat);
  if (target) trace.seed = cfg.seed;

  std::ostringstream trace_text;
  write_trace_jsonl(trace_text, trace);
  if (cfg.out.empty()) {
    out << trace_text.str();
  } else {
    write_output(cfg.out, trace_text.str());
  }

  std::string ids;
  for (TokenId t : trace.tokens()) ids += (ids.empty() ? "" : " ") + std::to_string(t);
  fmt::print(cfg.out.empty() ? err : out, "tokens={}\n", ids);
  if (trace.stop_reason == "error") {
    err << "error: " << trace.error << '\n';
    return kBackend;
  }
  std::ostream& info = cfg.out.empty() ? err : out;
  if (const auto p = trace.final_projection()) fmt::print(info, "final_projection={}\n", *p);

  if (cfg.baseline) {
    const GenerationTrace base = unguided_generate(*backend, prompt, cfg.k, cfg.steps, sampler_seed,
                                                   &*target, metric, stat);
    if (!cfg.out.empty()) {
      std::ostringstream base_text;
      write_trace_jsonl(base_text, base);
      write_output(cfg.out + ".baseline.jsonl", base_text.str());
    }
    if (base.stop_reason == "error") {
      err << "error: baseline: " << base.error << '\n';
      return kBackend;
    }
    const RelativeProjection rel = relative_projection(trace, base);
    fmt::print(info, "baseline_final_projection={}\n", *base.final_projection());
    fmt::print(info, "relative_projection={}\n", rel.final_value);
  }
  return kOk;
}

int cmd_serve(const RunConfig& cfg, std::istream& in, std::ostream& out, std::ostream& err) {
  require(!cfg.backend.empty(), "--backend SPEC is required");
  const auto backend = open_backend(cfg.backend);
  if (cfg.port < 0) {
    serve_stream(*backend, in, out);
    return kOk;
  }
  require(cfg.port <= 65535, "--port must be in [0, 65535]");
  TcpServer server(*backend, static_cast<std::uint16_t>(cfg.port));
  fmt::print(err, "listening on 127.0.0.1:{}\n", server.port());
  err.flush();
  server.run();
  return kOk;
}

}  // namespace

std::optional<std::pair<std::string, std::string>> split_combined(
    const std::string& selector, const std::function<bool(const std::string&)>& known) {
  std::optional<std::pair<std::string, std::string>> found;
  for (std::size_t pos = selector.find('-'); pos != std::string::npos; pos = selector.find('-', pos + 1)) {
    std::string b = selector.substr(0, pos);
    std::string a = selector.substr(pos + 1);
    if (b.empty() || a.empty() || !known(b) || !known(a)) continue;
    if (found) throw DomainError("combined selector '" + selector + "' is ambiguous");
    found.emplace(std::move(b), std::move(a));
  }
  return found;
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Multi-token word and concept frames over a whitened unembedding space", "frh"};
  app.require_subcommand(1);

  auto add_space = [&](CLI::App* c) { c->add_option("--space", cfg.space, "Space bundle directory"); };
  auto add_lexicon = [&](CLI::App* c) { c->add_option("--lexicon", cfg.lexicon, "Lexicon TSV"); };
  auto add_store = [&](CLI::App* c) { c->add_option("--store", cfg.store, "Concept store directory"); };
  auto add_backend = [&](CLI::App* c) {
    c->add_option("--backend", cfg.backend, "toy:SEED:D:V | exec:COMMAND | tcp:HOST:PORT");
  };
  auto add_out = [&](CLI::App* c) { c->add_option("--out", cfg.out, "Output path"); };
  auto add_langs = [&](CLI::App* c) { c->add_option("--langs", cfg.langs, "Comma-separated languages"); };
  auto add_max_tokens = [&](CLI::App* c) {
    c->add_option("--max-tokens", cfg.max_tokens, "Longest lemma kept, in tokens")->capture_default_str();
  };
  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", cfg.seed, "Run seed")->capture_default_str(); };

  auto* export_toy = app.add_subcommand("export-toy", "Write a toy backend's W_U tensor and vocab");
  add_backend(export_toy);
  add_out(export_toy);

  auto* build_space = app.add_subcommand("build-space", "Build a space bundle from W_U and a vocab");
  build_space->add_option("--tensor", cfg.tensor, "W_U tensor file (V x d)");
  build_space->add_option("--vocab", cfg.vocab, "Vocabulary file");
  build_space->add_option("--lambda", cfg.lambda, "Ridge factor for the whitening")->capture_default_str();
  add_space(build_space);

  auto* build_concepts = app.add_subcommand("build-concepts", "Build concept frames into a store");
  add_space(build_concepts);
  add_lexicon(build_concepts);
  add_store(build_concepts);
  add_max_tokens(build_concepts);
  add_langs(build_concepts);
  build_concepts->add_option("--only", cfg.only, "Build only this synset (repeatable)");
  build_concepts->add_option("--combined", cfg.combined, "Also build the combined concept B-A");

  auto* report = app.add_subcommand("report", "Write a CSV report");
  report->require_subcommand(1);
  auto* rank = report->add_subcommand("rank", "Numerical rank of word frames");
  auto* projection = report->add_subcommand("projection", "Member versus random projections");
  auto* histogram = report->add_subcommand("histogram", "Lemma token-count histogram");
  for (auto* c : {rank, projection, histogram}) {
    add_space(c);
    add_lexicon(c);
    add_out(c);
    add_langs(c);
  }
  add_max_tokens(rank);
  add_max_tokens(projection);
  add_store(projection);
  add_seed(projection);
  projection->add_option("--n-random", cfg.n_random, "Random frames per concept")->capture_default_str();
  projection->add_option("--only", cfg.only, "Report only this concept (repeatable)");
  projection->add_option("--concept", cfg.concept_id, "Report only this concept");
  histogram->add_option("--vocab", cfg.vocab, "Vocabulary file (instead of --space)");

  auto* generate = app.add_subcommand("generate", "Guided or sampled generation");
  add_backend(generate);
  add_space(generate);
  add_store(generate);
  add_out(generate);
  add_seed(generate);
  generate->add_option("--concept", cfg.concept_id, "Concept id to steer towards");
  generate->add_option("--combined", cfg.combined, "Combined concept B-A to steer towards");
  generate->add_option("--k", cfg.k, "Candidates per step")->capture_default_str();
  generate->add_option("--steps", cfg.steps, "Tokens to generate")->capture_default_str();
  generate->add_option("--prompt", cfg.prompt, "Prompt text (BOS is prepended)");
  generate->add_flag("--baseline", cfg.baseline, "Also run top-k sampling and report the difference");
  generate->add_flag("--normalized", cfg.normalized, "Probe with M-normalized hidden states");

  auto* serve = app.add_subcommand("serve", "Serve a backend over the wire protocol");
  add_backend(serve);
  serve->add_option("--port", cfg.port, "Listen on 127.0.0.1:PORT instead of stdio (0 = any)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*export_toy) return cmd_export_toy(cfg, out);
    if (*build_space) return cmd_build_space(cfg, out);
    if (*build_concepts) return cmd_build_concepts(cfg, out, err);
    if (*rank) return cmd_report_rank(cfg, out);
    if (*projection) return cmd_report_projection(cfg, out);
    if (*histogram) return cmd_report_histogram(cfg, out);
    if (*generate) return cmd_generate(cfg, out, err);
    if (*serve) return cmd_serve(cfg, in, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kFormat;
  } catch (const NotFoundError& e) {
    err << "not found: " << e.what() << '\n';
    return kMissing;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << '\n';
    return kBackend;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace frh::cli
