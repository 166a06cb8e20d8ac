#include "frh/token_space.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace frh {

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const std::string& t = tokens_[i];
    if (t.empty()) throw FormatError("vocab: empty token at id " + std::to_string(i));
    if (!index_.emplace(t, static_cast<TokenId>(i)).second) {
      throw FormatError("vocab: duplicate token '" + t + "' at id " + std::to_string(i));
    }
    max_len_ = std::max(max_len_, t.size());
  }
}

Vocab Vocab::load(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return Vocab(std::move(tokens));
}

Vocab Vocab::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open vocab file " + path.string());
  return load(in);
}

void Vocab::save(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

void Vocab::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot create vocab file " + path.string());
  save(out);
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw NotFoundError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocab::find(std::string_view s) const {
  auto it = index_.find(std::string(s));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenIds tokenize(const Vocab& vocab, std::string_view text) {
  TokenIds out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t longest = std::min(vocab.max_token_length(), text.size() - pos);
    bool matched = false;
    for (std::size_t len = longest; len > 0; --len) {
      if (auto id = vocab.find(text.substr(pos, len))) {
        out.push_back(*id);
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw TokenizeError(pos, "no vocab entry covers byte offset " + std::to_string(pos));
    }
  }
  return out;
}

std::string detokenize(const Vocab& vocab, std::span<const TokenId> ids) {
  std::string out;
  for (TokenId id : ids) out += vocab.token(id);
  return out;
}

Vector compute_bias(const Matrix& unembedding) {
  if (unembedding.rows() == 0) throw DomainError("compute_bias: empty matrix");
  Vector sum = Vector::Zero(unembedding.cols());
  for (Index i = 0; i < unembedding.rows(); ++i) sum += unembedding.row(i).transpose();
  return sum / static_cast<double>(unembedding.rows());
}

Metric compute_whitening(const Matrix& unembedding, double lambda) {
  if (unembedding.rows() < 2) throw DomainError("compute_whitening: need at least 2 rows");
  if (lambda < 0.0) throw DomainError("compute_whitening: lambda must be >= 0");
  const Index d = unembedding.cols();
  const Vector mean = compute_bias(unembedding);
  const Matrix centered = unembedding.rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(unembedding.rows());
  if (!cov.allFinite()) throw DomainError("compute_whitening: covariance is not finite");
  cov += lambda * (cov.trace() / static_cast<double>(d)) * Matrix::Identity(d, d);

  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw DomainError("compute_whitening: covariance is singular (try lambda > 0)");
  }
  Matrix inv = llt.solve(Matrix::Identity(d, d));
  inv = 0.5 * (inv + inv.transpose());
  return Metric(std::move(inv));
}

UnembeddingSpace::UnembeddingSpace(Matrix unembedding, double lambda)
    : unembedding_(std::move(unembedding)),
      lambda_(lambda),
      bias_(compute_bias(unembedding_)),
      metric_(compute_whitening(unembedding_, lambda)) {
  if (unembedding_.rows() < 2 || unembedding_.cols() < 2) {
    throw DimensionError("unembedding space needs V >= 2 and d >= 2");
  }
  debiased_ = (unembedding_.rowwise() - bias_.transpose()).transpose();
}

Vector token_vector(const UnembeddingSpace& space, TokenId id) {
  if (id < 0 || id >= space.vocab_size()) {
    throw NotFoundError("token id " + std::to_string(id) + " out of range [0, " +
                        std::to_string(space.vocab_size()) + ")");
  }
  return space.debiased().col(id);
}

Frame word_frame(const UnembeddingSpace& space, std::span<const TokenId> ids) {
  if (ids.empty()) throw DomainError("word_frame: empty token sequence");
  if (static_cast<Index>(ids.size()) > space.dim()) {
    throw DimensionError("word_frame: " + std::to_string(ids.size()) + " tokens exceed d = " +
                         std::to_string(space.dim()));
  }
  Matrix cols(space.dim(), static_cast<Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    cols.col(static_cast<Index>(j)) = token_vector(space, ids[j]);
  }
  return Frame(std::move(cols));
}

}  // namespace frh
