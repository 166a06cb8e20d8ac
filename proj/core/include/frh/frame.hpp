#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace frh {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/**
 * An ordered set of k columns in R^d, stored as a d x k matrix.
 *
 * Words, concepts and feature windows are all frames. Column order is part of
 * the value: two frames spanning the same subspace in a different order are
 * different frames. k = 0 is the null frame, the origin of frame space.
 */
class Frame {
 public:
  /// Null frame in R^d.
  explicit Frame(Index d = 0) : columns_(d, 0) {}
  explicit Frame(Matrix columns) : columns_(std::move(columns)) {}

  static Frame null(Index d) { return Frame(d); }

  Index dim() const { return columns_.rows(); }
  Index size() const { return columns_.cols(); }
  bool is_null() const { return columns_.cols() == 0; }

  auto column(Index j) const { return columns_.col(j); }
  const Matrix& matrix() const { return columns_; }

  /// Appends zero columns on the right until the frame has k columns.
  Frame padded_right(Index k) const;
  /// First k columns (k <= size()).
  Frame leading(Index k) const;

  bool all_finite() const { return columns_.allFinite(); }

  friend bool operator==(const Frame& a, const Frame& b) {
    return a.dim() == b.dim() && a.size() == b.size() && a.columns_ == b.columns_;
  }

 private:
  Matrix columns_;
};

/// Whitening inner product <a, b>_M = a^T M b with M symmetric positive definite.
class Metric {
 public:
  /// Throws DomainError if m is not square, not symmetric (1e-9 relative) or not PD.
  explicit Metric(Matrix m);

  static Metric identity(Index d) { return Metric(Matrix::Identity(d, d)); }

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

struct RankReport {
  int token_count = 0;
  int numerical_rank = 0;
  double relative_rank = 0.0;
};

double whitened_inner(const Metric& m, const Vector& a, const Vector& b);

/// ||v||_M; throws DimensionError on length mismatch.
double metric_norm(const Metric& m, const Vector& v);

/// Cosine of the M-angle between two rays. Throws DomainError on a zero vector.
double ray_correlation(const Metric& m, const Vector& a, const Vector& b);

/// Scales every column to unit M-norm. Zero columns raise DomainError.
Frame normalize_columns(const Metric& m, const Frame& f);

/**
 * Asymmetric Procrustes distance
 *   sqrt(k1 + k2 - 2 sum_{j <= min(k1,k2)} a_j^T M b_j)
 * on M-normalized columns. Either frame may be null.
 */
double procrustes_distance(const Metric& m, const Frame& a, const Frame& b);

/// Law-of-cosines frame correlation on M-normalized columns, in [-1, 1].
double frame_correlation(const Metric& m, const Frame& a, const Frame& b);

/// Same pairing as frame_correlation but on raw (unnormalized) columns.
double frame_projection(const Metric& m, const Frame& target, const Frame& word);

/// max(d, k) * sigma_max * machine epsilon.
double default_rank_tolerance(Index d, Index k, double sigma_max);

int numerical_rank(const Frame& f, std::optional<double> tol = std::nullopt);

RankReport rank_report(const Frame& word, std::optional<double> tol = std::nullopt);

/// Thin SVD A = U diag(s) V^T with each pair's sign fixed so that the
/// largest-magnitude entry of the left vector is positive.
struct ThinSvd {
  Matrix left;
  Vector singular;
  Matrix right;
};

ThinSvd thin_svd(const Matrix& a);

struct ClosestFrame {
  Frame frame;
  /// tr(X_kept^T M S) at the returned S.
  double objective = 0.0;
  int effective_rank = 0;
  /// X (or M X) was identically zero; frame is null.
  bool degenerate = false;
  /// Two retained singular values coincide to 1e-10 relative.
  bool repeated_spectrum = false;
  /// Columns of X the returned frame corresponds to, in order.
  std::vector<Index> kept_columns;
};

/**
 * Orthonormal frame maximizing tr(X^T M S), from the thin SVD M X = P S Q^T
 * as S = P Q^T.
 *
 * When M X has effective rank r < k the problem is solved on the r columns of
 * X selected by column-pivoted QR (kept in their original order), so the
 * result always has r Euclidean-orthonormal columns.
 */
ClosestFrame closest_frame(const Matrix& x, const Metric& m,
                           std::optional<double> tol = std::nullopt);

/// ||a - b|| for unit vectors, equal to 2 sin(theta / 2).
double ray_chordal_distance(const Vector& a, const Vector& b);

struct SubspaceMetrics {
  double projective_distance = 0.0;
  double correlation = 0.0;
};

/// Distance and correlation between the lines spanned by a and b.
SubspaceMetrics subspace_metrics(const Vector& a, const Vector& b);

struct GeodesicCheck {
  double residual = 0.0;
  double omega_norm = 0.0;
};

/**
 * With B = A exp(Omega), measures how far the chord B - A is from the geodesic
 * velocity at the midpoint, A exp(Omega / 2) Omega. The two series agree up
 * to the Omega^2 term, so the residual is O(||Omega||^3).
 */
GeodesicCheck geodesic_midpoint_check(const Frame& a, const Matrix& omega);

}  // namespace frh
