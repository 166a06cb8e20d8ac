// Acceptance run: one PASS/FAIL line per headline property, exit status 1 if any fails.

#include "frh/backend.hpp"
#include "frh/concepts.hpp"
#include "frh/decode.hpp"
#include "frh/frame.hpp"
#include "frh/lexicon.hpp"
#include "frh/random.hpp"
#include "frh/reports.hpp"

#include <fmt/format.h>

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>

using namespace frh;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double time_limit_s;  // <= 0: no limit
  std::function<Outcome()> run;
};

Metric random_metric(Rng& rng, Index d) {
  const Matrix g = rng.gaussian_matrix(d, d);
  return Metric(g * g.transpose() / static_cast<double>(d) + Matrix::Identity(d, d));
}

// Rows +v and -v for each column v: the bias vanishes and token i has debiased vector v_i.
UnembeddingSpace mirrored_space(const Matrix& vectors) {
  Matrix rows(2 * vectors.cols(), vectors.rows());
  rows.topRows(vectors.cols()) = vectors.transpose();
  rows.bottomRows(vectors.cols()) = -vectors.transpose();
  return UnembeddingSpace(std::move(rows));
}

double angle(const Vector& a, const Vector& b) {
  return std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0));
}

// ---------------------------------------------------------------------------

Outcome full_rank() {
  ToyBackend toy(7, 64, 500);
  const UnembeddingSpace space(toy.unembedding());
  const Vocab vocab = toy_vocab(500);
  const Lexicon lex = load_lexicon_file(FRH_SAMPLE_LEXICON);
  const RankReportResult r = rank_report(lex, vocab, space, 4);

  std::size_t repeated = 0;
  std::size_t repeated_deficient = 0;
  for (const auto& [id, synset] : lex.synsets) {
    for (const Word& w : synset_word_set(lex, space, vocab, id, std::nullopt, 4).words) {
      if (std::set<TokenId>(w.tokens.begin(), w.tokens.end()).size() == w.tokens.size()) continue;
      ++repeated;
      if (frh::rank_report(w.frame).relative_rank < 1.0) ++repeated_deficient;
    }
  }
  const bool ok = r.full_rank_fraction >= 0.99 && repeated_deficient == repeated;
  return {ok, fmt::format("words={} full_rank_fraction={:.5f} repeated-token words={} with relative rank < 1: {}",
                          r.n_words, r.full_rank_fraction, repeated, repeated_deficient)};
}

// Synthetic synsets: each word of synset s has token j drawn as column j of a hidden
// frame H_s plus isotropic noise of the same norm; other tokens are pure background.
Outcome projection_separation() {
  constexpr Index d = 32;
  constexpr int n_synsets = 20;
  constexpr int n_words = 8;
  constexpr int k = 2;
  constexpr int n_background = 1000;
  Rng rng(derive_seed(2024, "acceptance/projection"));

  std::vector<std::string> names;
  std::vector<Vector> rows;
  auto add_token = [&](Vector v) {
    names.push_back(fmt::format("x{:05d}", names.size()));
    rows.push_back(std::move(v));
    return names.back();
  };
  std::ostringstream tsv;
  for (int s = 0; s < n_synsets; ++s) {
    const Matrix hidden = rng.orthonormal_frame(d, k) * std::sqrt(static_cast<double>(d));
    for (int w = 0; w < n_words; ++w) {
      std::string lemma;
      for (int j = 0; j < k; ++j) {
        Vector noise(d);
        for (Index i = 0; i < d; ++i) noise(i) = rng.gaussian();
        lemma += add_token(hidden.col(j) + noise);
      }
      tsv << fmt::format("syn{:02d}.n.01\tsyn\t{}\n", s, lemma);
    }
  }
  for (int b = 0; b < n_background; ++b) {
    Vector v(d);
    for (Index i = 0; i < d; ++i) v(i) = rng.gaussian();
    add_token(std::move(v));
  }
  Matrix wu(static_cast<Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) wu.row(static_cast<Index>(i)) = rows[i].transpose();
  const UnembeddingSpace space(std::move(wu));
  const Vocab vocab(names);
  std::istringstream tsv_in(tsv.str());
  const Lexicon lex = load_lexicon(tsv_in);

  std::vector<ConceptFrame> concepts;
  for (const auto& [id, synset] : lex.synsets) {
    ConceptFrame c = concept_frame(space, synset_word_set(lex, space, vocab, id, std::nullopt, 4));
    c.id = id;
    concepts.push_back(std::move(c));
  }
  const ProjectionReportResult r = projection_report(lex, vocab, space, concepts, 100, 99);
  const double sep = pooled_separation(r.member, r.random);
  const bool random_near_zero = std::abs(r.random.mean) <= 3.0 * r.random.sem;
  const bool ok = random_near_zero && r.member.mean > 0.0 && sep >= 3.0;
  return {ok, fmt::format("member mean={:.4f} (n={}); random mean={:.4f} sem={:.4f} (n={}); separation={:.2f}",
                          r.member.mean, r.member.n, r.random.mean, r.random.sem, r.random.n, sep)};
}

Outcome procrustes_optimality() {
  Rng rng(derive_seed(2024, "acceptance/procrustes"));
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (int set = 0; set < 100; ++set) {
    const Index d = 3 + static_cast<Index>(rng.below(6));                   // 3..8
    const Index k = 1 + static_cast<Index>(rng.below(std::min<Index>(3, d)));  // 1..3
    const UnembeddingSpace space(rng.gaussian_matrix(4 * d, d));
    WordSet ws;
    ws.synset_id = "w.n.01";
    const int n = 2 + static_cast<int>(rng.below(5));
    for (int w = 0; w < n; ++w) {
      const Index t = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(k)));
      ws.words.push_back(Word{"syn", fmt::format("w{}", w), TokenIds(static_cast<std::size_t>(t), 0),
                              Frame(rng.gaussian_matrix(d, t))});
    }
    const ConceptFrame c = concept_frame(space, ws, static_cast<int>(k));
    const Matrix x = padded_word_sum(ws, k);
    const Matrix mx = space.metric().matrix() * x;
    const double best = (c.frame.matrix().transpose() * mx).trace();
    for (int trial = 0; trial < 1000; ++trial) {
      const Matrix q = rng.orthonormal_frame(d, k);
      const double v = (q.transpose() * mx).trace();
      worst_margin = std::min(worst_margin, best - v);
      if (v > best) ++violations;
    }
  }
  return {violations == 0, fmt::format("100 sets x 1000 random frames: violations={} smallest margin={:.3e}",
                                       violations, worst_margin)};
}

// Engineered toy family: for seed s, the toy model toy:s:64:500 and the concept frame of
// the s-th usable synset of the bundled lexicon, probed under the model's whitening metric.
struct GuidanceCase {
  std::unique_ptr<ToyBackend> backend;
  std::unique_ptr<UnembeddingSpace> space;
  ConceptFrame target;
};

Outcome guidance_grows_with_k() {
  const Lexicon lex = load_lexicon_file(FRH_SAMPLE_LEXICON);
  const Vocab vocab = toy_vocab(500);
  std::vector<std::string> ids;
  for (const auto& [id, s] : lex.synsets) ids.push_back(id);

  constexpr int kSeeds = 100;
  constexpr int kSteps = 20;
  const std::vector<int> ks = {1, 3, 8};
  std::vector<std::vector<double>> finals(ks.size());
  std::vector<double> relative8;

  std::size_t next_synset = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(1000 + s);
    ToyBackend toy(seed, 64, 500);
    const UnembeddingSpace space(toy.unembedding());
    WordSet ws;
    do {
      ws = synset_word_set(lex, space, vocab, ids[next_synset++ % ids.size()], std::nullopt, 4);
    } while (ws.words.empty());
    ConceptFrame target = concept_frame(space, ws);
    target.id = ws.synset_id;
    const Metric& m = space.metric();

    for (std::size_t i = 0; i < ks.size(); ++i) {
      const GenerationTrace g = guided_generate(toy, target, {0}, ks[i], kSteps, m);
      if (g.stop_reason != "steps") return {false, "generation failed: " + g.error};
      finals[i].push_back(*g.final_projection());
      if (ks[i] == 8) {
        const GenerationTrace u =
            unguided_generate(toy, {0}, 8, kSteps, derive_seed(seed, "generate/sampler"), &target, m);
        relative8.push_back(relative_projection(g, u).final_value);
      }
    }
  }

  std::vector<ClassStats> stats;
  for (const auto& f : finals) stats.push_back(class_stats(f));
  int inversions = 0;
  bool large_inversion = false;
  for (std::size_t i = 1; i < stats.size(); ++i) {
    if (stats[i].mean < stats[i - 1].mean) {
      ++inversions;
      const double sem = std::max(stats[i].sem, stats[i - 1].sem);
      if (stats[i - 1].mean - stats[i].mean > sem) large_inversion = true;
    }
  }
  const ClassStats rel = class_stats(relative8);
  const double lower95 = rel.mean - 1.96 * rel.sem;
  const bool ok = inversions <= 1 && !large_inversion && lower95 > 0.0;
  return {ok, fmt::format("mean final projection k=1:{:.4f} k=3:{:.4f} k=8:{:.4f} (inversions={}); "
                          "relative k=8 mean={:.4f} 95% lower={:.4f}",
                          stats[0].mean, stats[1].mean, stats[2].mean, inversions, rel.mean, lower95)};
}

Outcome geometry_suite() {
  Rng rng(derive_seed(2024, "acceptance/geometry"));
  constexpr Index d = 6;
  double cosine_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Metric m = random_metric(rng, d);
    const Index k1 = 1 + static_cast<Index>(rng.below(4));
    const Index k2 = 1 + static_cast<Index>(rng.below(4));
    const Frame a(rng.gaussian_matrix(d, k1));
    const Frame b(rng.gaussian_matrix(d, k2));
    const double dist = procrustes_distance(m, a, b);
    const double lhs = 2.0 * std::sqrt(static_cast<double>(k1 * k2)) * frame_correlation(m, a, b);
    cosine_err = std::max(cosine_err, std::abs(lhs - (static_cast<double>(k1 + k2) - dist * dist)));
  }

  double symmetry_err = 0.0, self_dist = 0.0, triangle_excess = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Metric m = random_metric(rng, d);
    const Index k = 1 + static_cast<Index>(rng.below(4));
    const Frame a = normalize_columns(m, Frame(rng.gaussian_matrix(d, k)));
    const Frame b = normalize_columns(m, Frame(rng.gaussian_matrix(d, k)));
    const Frame c = normalize_columns(m, Frame(rng.gaussian_matrix(d, k)));
    const double ab = procrustes_distance(m, a, b);
    symmetry_err = std::max(symmetry_err, std::abs(ab - procrustes_distance(m, b, a)));
    self_dist = std::max(self_dist, procrustes_distance(m, a, a));
    triangle_excess = std::max(triangle_excess, ab - procrustes_distance(m, a, c) - procrustes_distance(m, c, b));
  }

  // Least-squares slope of log residual against log theta.
  const std::vector<double> thetas = {0.05, 0.1, 0.2, 0.4};
  const Frame base(rng.orthonormal_frame(5, 2));
  std::vector<double> lx, ly;
  for (double t : thetas) {
    Matrix omega = Matrix::Zero(2, 2);
    omega(0, 1) = -t;
    omega(1, 0) = t;
    const GeodesicCheck g = geodesic_midpoint_check(base, omega);
    lx.push_back(std::log(g.omega_norm));
    ly.push_back(std::log(g.residual));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / 4.0;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / 4.0;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;

  // Counterfactual pairs against the difference of the per-side debiased token means.
  double cf_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Matrix wu = rng.gaussian_matrix(30, 8);
    const UnembeddingSpace space(wu);
    const Vector mean = wu.colwise().mean().transpose();
    std::vector<std::pair<TokenId, TokenId>> pairs;
    Vector first = Vector::Zero(8), second = Vector::Zero(8);
    for (int p = 0; p < 5; ++p) {
      const auto x = static_cast<TokenId>(rng.below(30));
      const auto y = static_cast<TokenId>(rng.below(30));
      if (x == y) continue;
      pairs.emplace_back(x, y);
      first += wu.row(x).transpose() - mean;
      second += wu.row(y).transpose() - mean;
    }
    if (pairs.empty()) continue;
    const double n = static_cast<double>(pairs.size());
    const Vector expected = (first / n - second / n).normalized();
    const Vector got = concept_vector_counterfactual(space, pairs).direction;
    cf_err = std::max(cf_err, (got - expected).norm());
  }

  const bool ok = cosine_err <= 1e-9 && symmetry_err <= 1e-9 && self_dist <= 1e-9 && triangle_excess <= 1e-9 &&
                  std::abs(slope - 3.0) <= 0.1 && cf_err <= 1e-9;
  return {ok, fmt::format("law of cosines err={:.1e}; symmetry err={:.1e} d(A,A)={:.1e} triangle excess={:.1e}; "
                          "geodesic slope={:.4f}; counterfactual err={:.1e}",
                          cosine_err, symmetry_err, self_dist, triangle_excess, slope, cf_err)};
}

Outcome concept_recovery() {
  constexpr Index d = 32;
  int wins = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(derive_seed(static_cast<std::uint64_t>(trial), "acceptance/recovery"));
    Vector c(d);
    for (Index i = 0; i < d; ++i) c(i) = rng.gaussian();
    // Per-coordinate noise scale 1 matches the expected norm of c.
    const Matrix tokens = c.replicate(1, 400) + rng.gaussian_matrix(d, 400);
    const UnembeddingSpace space = mirrored_space(tokens);
    TokenIds few(25), many(400);
    std::iota(few.begin(), few.end(), 0);
    std::iota(many.begin(), many.end(), 0);
    const double a25 = angle(concept_vector_from_tokens(space, few).direction, c);
    const double a400 = angle(concept_vector_from_tokens(space, many).direction, c);
    if (a400 < a25) ++wins;
  }
  return {wins >= 95, fmt::format("angle(n=400) < angle(n=25) in {}/100 trials", wins)};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() /
                        fmt::format("frh-acceptance-{}", std::chrono::steady_clock::now().time_since_epoch().count());
  const std::string frh = quote(FRH_CLI_PATH);
  const std::string lex = quote(FRH_SAMPLE_LEXICON);
  const std::vector<std::string> commands = {
      frh + " export-toy --backend toy:7:64:500 --out toy",
      frh + " build-space --tensor toy/unembedding.frht --vocab toy/vocab.txt --space space",
      frh + " build-concepts --space space --lexicon " + lex + " --store store",
      frh + " build-concepts --space space --lexicon " + lex + " --store store2 --only car.n.01" +
          " --combined woman.n.01-man.n.01",
      frh + " report rank --space space --lexicon " + lex + " --out rank.csv",
      frh + " report projection --space space --lexicon " + lex + " --store store --n-random 20 --seed 3" +
          " --out proj.csv",
      frh + " report histogram --space space --lexicon " + lex + " --out hist.csv",
      frh + " generate --backend toy:7:64:500 --space space --store store --concept car.n.01 --k 4" +
          " --steps 15 --seed 11 --baseline --out gen.jsonl",
      frh + " generate --backend toy:7:64:500 --space space --store store --combined woman.n.01-man.n.01" +
          " --k 3 --steps 10 --prompt baba --normalized",
      frh + " generate --backend toy:7:64:500 --k 5 --steps 10 --seed 4",
      "printf '{\"op\":\"meta\"}\\n{\"op\":\"features\",\"tokens\":[0,5,9]}\\n{\"op\":\"topk\",\"tokens\":[0],\"k\":5}\\n'"
      " | " + frh + " serve --backend toy:7:64:500",
  };

  std::vector<std::map<std::string, std::string>> snapshots;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    fs::create_directories(dir);
    std::map<std::string, std::string> snap;
    for (std::size_t i = 0; i < commands.size(); ++i) {
      const std::string cmd = "cd " + quote(dir.string()) + " && " + commands[i] + " > stdout." +
                              std::to_string(i) + " 2> stderr." + std::to_string(i);
      if (std::system(cmd.c_str()) != 0) {
        fs::remove_all(root);
        return {false, "command failed: " + commands[i]};
      }
    }
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (entry.is_regular_file()) snap[fs::relative(entry.path(), dir).string()] = slurp(entry.path());
    }
    snapshots.push_back(std::move(snap));
  }
  fs::remove_all(root);

  std::vector<std::string> differing;
  for (const auto& [name, bytes] : snapshots[0]) {
    const auto it = snapshots[1].find(name);
    if (it == snapshots[1].end() || it->second != bytes) differing.push_back(name);
  }
  if (snapshots[1].size() != snapshots[0].size()) differing.push_back("(file set)");
  std::string detail = fmt::format("{} commands, {} files compared", commands.size(), snapshots[0].size());
  for (const auto& n : differing) detail += "; differs: " + n;
  return {differing.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"full-rank word frames", 10.0, full_rank},
      {"projection separation", 30.0, projection_separation},
      {"procrustes optimality", 0.0, procrustes_optimality},
      {"guidance grows with k", 300.0, guidance_grows_with_k},
      {"geometry identities", 0.0, geometry_suite},
      {"concept recovery", 0.0, concept_recovery},
      {"cli determinism", 0.0, cli_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0.0 && secs >= c.time_limit_s) {
      o.pass = false;
      o.detail += fmt::format("; over the {:.0f} s budget", c.time_limit_s);
    }
    fmt::print("{} {} ({:.2f} s): {}\n", o.pass ? "PASS" : "FAIL", c.name, secs, o.detail);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
