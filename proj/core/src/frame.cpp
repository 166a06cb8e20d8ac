#include "frh/frame.hpp"

#include "frh/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace frh {
namespace {

void require_same_length(const Vector& a, const Vector& b, Index d) {
  if (a.size() != d || b.size() != d) {
    throw DimensionError("vector length mismatch: expected " + std::to_string(d) + ", got " +
                         std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
}

void require_same_dim(const Metric& m, const Frame& a, const Frame& b) {
  if (a.dim() != m.dim() || b.dim() != m.dim()) {
    throw DimensionError("frame ambient dimension mismatch: metric " + std::to_string(m.dim()) +
                         ", frames " + std::to_string(a.dim()) + " and " +
                         std::to_string(b.dim()));
  }
}

void require_finite(const Frame& f) {
  if (!f.all_finite()) throw DomainError("frame has non-finite entries");
}

// sum_{j < min(k1, k2)} a_j^T M b_j
double paired_inner_sum(const Metric& m, const Frame& a, const Frame& b) {
  const Index n = std::min(a.size(), b.size());
  if (n == 0) return 0.0;
  const Matrix mb = m.matrix() * b.matrix().leftCols(n);
  return a.matrix().leftCols(n).cwiseProduct(mb).sum();
}

}  // namespace

Frame Frame::padded_right(Index k) const {
  if (k < size()) throw DimensionError("cannot pad a frame to fewer columns");
  Matrix out = Matrix::Zero(dim(), k);
  out.leftCols(size()) = columns_;
  return Frame(std::move(out));
}

Frame Frame::leading(Index k) const {
  if (k > size() || k < 0) throw DimensionError("leading: column count out of range");
  return Frame(Matrix(columns_.leftCols(k)));
}

Metric::Metric(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw DomainError("metric must be square");
  if (m_.rows() == 0) throw DomainError("metric must be non-empty");
  if (!m_.allFinite()) throw DomainError("metric has non-finite entries");
  const double scale = m_.cwiseAbs().maxCoeff();
  if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw DomainError("metric is not symmetric");
  }
  Eigen::LLT<Matrix> llt(m_);
  if (llt.info() != Eigen::Success) throw DomainError("metric is not positive definite");
}

double whitened_inner(const Metric& m, const Vector& a, const Vector& b) {
  require_same_length(a, b, m.dim());
  return a.dot(m.matrix() * b);
}

double metric_norm(const Metric& m, const Vector& v) {
  return std::sqrt(whitened_inner(m, v, v));
}

double ray_correlation(const Metric& m, const Vector& a, const Vector& b) {
  const double aa = whitened_inner(m, a, a);
  const double bb = whitened_inner(m, b, b);
  if (aa == 0.0 || bb == 0.0) throw DomainError("ray correlation of a zero vector");
  return whitened_inner(m, a, b) / (std::sqrt(aa) * std::sqrt(bb));
}

Frame normalize_columns(const Metric& m, const Frame& f) {
  if (f.dim() != m.dim()) throw DimensionError("frame/metric dimension mismatch");
  require_finite(f);
  Matrix out = f.matrix();
  for (Index j = 0; j < out.cols(); ++j) {
    const double n = std::sqrt(out.col(j).dot(m.matrix() * out.col(j)));
    if (n == 0.0) throw DomainError("cannot normalize zero column " + std::to_string(j));
    out.col(j) /= n;
  }
  return Frame(std::move(out));
}

double procrustes_distance(const Metric& m, const Frame& a, const Frame& b) {
  require_same_dim(m, a, b);
  const Frame an = normalize_columns(m, a);
  const Frame bn = normalize_columns(m, b);
  // Same value as k1 + k2 - 2 sum a_j^T M b_j, without the cancellation near zero.
  const Index n = std::min(a.size(), b.size());
  const Matrix diff = an.matrix().leftCols(n) - bn.matrix().leftCols(n);
  const double paired = diff.cwiseProduct(m.matrix() * diff).sum();
  return std::sqrt(std::max(paired, 0.0) + static_cast<double>(a.size() + b.size() - 2 * n));
}

double frame_correlation(const Metric& m, const Frame& a, const Frame& b) {
  require_same_dim(m, a, b);
  if (a.is_null() || b.is_null()) throw DomainError("frame correlation with the null frame");
  const Frame an = normalize_columns(m, a);
  const Frame bn = normalize_columns(m, b);
  return paired_inner_sum(m, an, bn) /
         std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double frame_projection(const Metric& m, const Frame& target, const Frame& word) {
  require_same_dim(m, target, word);
  if (target.is_null() || word.is_null()) throw DomainError("frame projection with the null frame");
  return paired_inner_sum(m, target, word) /
         std::sqrt(static_cast<double>(target.size()) * static_cast<double>(word.size()));
}

double default_rank_tolerance(Index d, Index k, double sigma_max) {
  return static_cast<double>(std::max(d, k)) * sigma_max * std::numeric_limits<double>::epsilon();
}

int numerical_rank(const Frame& f, std::optional<double> tol) {
  if (f.is_null()) throw DomainError("numerical rank of the null frame");
  require_finite(f);
  const Vector s = Eigen::JacobiSVD<Matrix>(f.matrix()).singularValues();
  const double cutoff = tol ? *tol : default_rank_tolerance(f.dim(), f.size(), s(0));
  return static_cast<int>((s.array() > cutoff).count());
}

RankReport rank_report(const Frame& word, std::optional<double> tol) {
  RankReport r;
  r.token_count = static_cast<int>(word.size());
  r.numerical_rank = numerical_rank(word, tol);
  r.relative_rank = static_cast<double>(r.numerical_rank) / r.token_count;
  return r;
}

ThinSvd thin_svd(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Index i = 0; i < out.left.cols(); ++i) {
    Index arg = 0;
    out.left.col(i).cwiseAbs().maxCoeff(&arg);
    if (out.left(arg, i) < 0.0) {
      out.left.col(i) *= -1.0;
      out.right.col(i) *= -1.0;
    }
  }
  return out;
}

ClosestFrame closest_frame(const Matrix& x, const Metric& m, std::optional<double> tol) {
  if (x.rows() != m.dim()) throw DimensionError("closest_frame: X rows do not match metric");
  if (x.cols() > x.rows()) throw DimensionError("closest_frame: requires d >= k");
  if (!x.allFinite()) throw DomainError("closest_frame: non-finite input");

  ClosestFrame out;
  out.frame = Frame::null(x.rows());
  const Matrix y = m.matrix() * x;
  if (x.cols() == 0 || y.isZero(0.0)) {
    out.degenerate = true;
    return out;
  }

  ThinSvd svd = thin_svd(y);
  const double cutoff =
      tol ? *tol : default_rank_tolerance(y.rows(), y.cols(), svd.singular(0));
  const Index rank = (svd.singular.array() > cutoff).count();
  if (rank == 0) {
    out.degenerate = true;
    return out;
  }

  if (rank < y.cols()) {
    Eigen::ColPivHouseholderQR<Matrix> qr(y);
    std::vector<Index> kept;
    for (Index i = 0; i < rank; ++i) kept.push_back(qr.colsPermutation().indices()(i));
    std::sort(kept.begin(), kept.end());
    Matrix reduced(y.rows(), rank);
    for (Index i = 0; i < rank; ++i) reduced.col(i) = y.col(kept[static_cast<size_t>(i)]);
    svd = thin_svd(reduced);
    out.kept_columns = std::move(kept);
  } else {
    for (Index i = 0; i < y.cols(); ++i) out.kept_columns.push_back(i);
  }

  out.frame = Frame(Matrix(svd.left * svd.right.transpose()));
  out.objective = svd.singular.sum();
  out.effective_rank = static_cast<int>(out.frame.size());
  for (Index i = 1; i < svd.singular.size(); ++i) {
    if (svd.singular(i - 1) - svd.singular(i) <= 1e-10 * svd.singular(0)) {
      out.repeated_spectrum = true;
    }
  }
  return out;
}

double ray_chordal_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("ray_chordal_distance: length mismatch");
  if (std::abs(a.norm() - 1.0) > 1e-6 || std::abs(b.norm() - 1.0) > 1e-6) {
    throw DomainError("ray_chordal_distance: inputs must be unit vectors");
  }
  return (a - b).norm();
}

SubspaceMetrics subspace_metrics(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("subspace_metrics: length mismatch");
  const double aa = a.squaredNorm();
  const double bb = b.squaredNorm();
  if (aa == 0.0 || bb == 0.0) throw DomainError("subspace_metrics: zero vector");
  const double ab = a.dot(b);
  SubspaceMetrics out;
  out.correlation = std::min(1.0, (ab * ab) / (aa * bb));
  out.projective_distance = std::sqrt(1.0 - out.correlation);
  return out;
}

GeodesicCheck geodesic_midpoint_check(const Frame& a, const Matrix& omega) {
  const Index k = a.size();
  if (omega.rows() != k || omega.cols() != k) {
    throw DimensionError("geodesic_midpoint_check: Omega must be k x k");
  }
  if ((omega + omega.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw DomainError("geodesic_midpoint_check: Omega is not skew-symmetric");
  }
  if (k > 0 && (a.matrix().transpose() * a.matrix() - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() >
                   1e-9) {
    throw DomainError("geodesic_midpoint_check: A must have orthonormal columns");
  }
  const Matrix b = a.matrix() * omega.exp();
  const Matrix half = (0.5 * omega).exp();
  const Matrix velocity = a.matrix() * half * omega;
  return {((b - a.matrix()) - velocity).norm(), omega.norm()};
}

}  // namespace frh
