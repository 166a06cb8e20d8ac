#include "frh/store.hpp"

#include "frh/errors.hpp"
#include "frh/tensor_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>

namespace frh {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSpaceFormat = "frh-space-1";

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot create " + path.string());
  out << text;
}

ConceptSource parse_source(const std::string& s) {
  for (auto src : {ConceptSource::TokenSet, ConceptSource::Counterfactual,
                   ConceptSource::Combined, ConceptSource::WordFrames}) {
    if (s == to_string(src)) return src;
  }
  throw FormatError("unknown concept source '" + s + "'");
}

}  // namespace

void write_space_bundle(const fs::path& dir, const UnembeddingSpace& space, const Vocab& vocab) {
  if (static_cast<Index>(vocab.size()) != space.vocab_size()) {
    throw FormatError("vocab has " + std::to_string(vocab.size()) + " entries but W_U has " +
                      std::to_string(space.vocab_size()) + " rows");
  }
  fs::create_directories(dir);
  write_tensor_file(dir / "unembedding.frht", space.unembedding());
  write_tensor_file(dir / "bias.frht", Matrix(space.bias().transpose()));
  write_tensor_file(dir / "metric.frht", space.metric().matrix());
  vocab.save_file(dir / "vocab.txt");

  json manifest = {{"format", kSpaceFormat},
                   {"d", space.dim()},
                   {"vocab", space.vocab_size()},
                   {"lambda", space.lambda()},
                   {"files",
                    {{"unembedding", "unembedding.frht"},
                     {"bias", "bias.frht"},
                     {"metric", "metric.frht"},
                     {"vocab", "vocab.txt"}}}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

SpaceBundle load_space_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw NotFoundError("space bundle " + dir.string() + " not found");
  const json manifest = read_json_file(dir / "manifest.json");
  try {
    if (manifest.at("format").get<std::string>() != kSpaceFormat) {
      throw FormatError("unsupported space bundle format");
    }
    const double lambda = manifest.at("lambda").get<double>();
    Matrix wu = read_tensor_file(dir / manifest.at("files").at("unembedding").get<std::string>());
    Vocab vocab = Vocab::load_file(dir / manifest.at("files").at("vocab").get<std::string>());
    if (wu.rows() != manifest.at("vocab").get<Index>() || wu.cols() != manifest.at("d").get<Index>()) {
      throw FormatError("space bundle manifest does not match the unembedding tensor");
    }
    if (static_cast<Index>(vocab.size()) != wu.rows()) {
      throw FormatError("space bundle vocab size does not match W_U rows");
    }
    return SpaceBundle{UnembeddingSpace(std::move(wu), lambda), std::move(vocab)};
  } catch (const json::exception& e) {
    throw FormatError(std::string("space manifest: ") + e.what());
  }
}

std::string concept_file_stem(const std::string& id) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : id) {
    if (std::isalnum(c) || c == '.' || c == '-' || c == '_') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xf]);
    }
  }
  if (out.empty() || out.front() == '.') out.insert(0, "%");
  return out;
}

void save_concept(const fs::path& store, const ConceptFrame& target) {
  fs::create_directories(store);
  const std::string stem = concept_file_stem(target.id);
  write_tensor_file(store / (stem + ".frht"), target.frame.matrix());
  json meta = {{"id", target.id},
               {"k", target.k},
               {"effective_rank", target.effective_rank},
               {"n_words", target.n_words},
               {"source", to_string(target.source)},
               {"objective", target.objective},
               {"parents", target.parents}};
  write_text_file(store / (stem + ".json"), meta.dump() + "\n");
}

ConceptFrame load_concept(const fs::path& store, const std::string& id) {
  const std::string stem = concept_file_stem(id);
  const fs::path meta_path = store / (stem + ".json");
  if (!fs::exists(meta_path)) throw NotFoundError("concept '" + id + "' not in store " + store.string());
  const json meta = read_json_file(meta_path);
  const Matrix stored = read_tensor_file(store / (stem + ".frht"));

  ConceptFrame c;
  try {
    c.id = meta.at("id").get<std::string>();
    c.k = meta.at("k").get<int>();
    c.effective_rank = meta.at("effective_rank").get<int>();
    c.n_words = meta.at("n_words").get<int>();
    c.source = parse_source(meta.at("source").get<std::string>());
    c.objective = meta.value("objective", 0.0);
    c.parents = meta.value("parents", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw FormatError("concept metadata " + meta_path.string() + ": " + e.what());
  }
  if (stored.cols() != c.effective_rank) {
    throw FormatError("concept '" + id + "': frame width does not match effective_rank");
  }
  // The tensor holds binary32 values; snap back to the nearest orthonormal frame.
  const ThinSvd svd = thin_svd(stored);
  c.frame = Frame(Matrix(svd.left * svd.right.transpose()));
  return c;
}

std::vector<std::string> list_concepts(const fs::path& store) {
  std::vector<std::string> ids;
  if (!fs::is_directory(store)) throw NotFoundError("concept store " + store.string() + " not found");
  for (const auto& entry : fs::directory_iterator(store)) {
    if (entry.path().extension() != ".json") continue;
    const json meta = read_json_file(entry.path());
    if (meta.contains("id")) ids.push_back(meta["id"].get<std::string>());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace frh
