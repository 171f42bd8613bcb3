#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sentinel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Ridge added to the reference covariance before any square root.
inline constexpr double kDefaultEpsilon = 1e-6;

/// Tolerances shared by the symmetric-matrix routines.
inline constexpr double kSymmetryTolerance = 1e-9;
inline constexpr double kEigenClampTolerance = 1e-8;

/// Mean, biased (divide-by-n) covariance and sample count of a sample set.
struct Moments {
  Vector mean;
  Matrix cov;
  std::size_t count = 0;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

/// Rows of `samples` are observations. Throws EmptySampleSet on zero rows.
Moments estimate_moments(const Matrix& samples);
Moments estimate_moments(std::span<const Vector> samples);

/// Exact moments of the union of several sample sets, given only their moments.
Moments pool_moments(std::span<const Moments> parts);

/// Principal square root of a symmetric PSD matrix via its eigendecomposition.
/// Eigenvalues down to -1e-8 are clamped to zero.
Matrix sqrtm_psd(const Matrix& m);

/// Squared Frechet (2-Wasserstein) distance between N(ref) and N(qry).
///
/// `epsilon * I` is added to the reference covariance, which is the only matrix
/// that is square-rooted: the trace term is evaluated as the sum of square roots
/// of the eigenvalues of S * qry.cov * S with S = sqrt(ref.cov + epsilon * I).
double frechet_distance(const Moments& ref, const Moments& qry,
                        double epsilon = kDefaultEpsilon);

/// Reference side of the Frechet distance with its regularized covariance and
/// square root cached, so repeated queries against one reference are cheap.
class FrechetReference {
 public:
  FrechetReference() = default;
  FrechetReference(const Moments& ref, double epsilon);

  /// Same value as frechet_distance(ref, qry, epsilon).
  double distance(const Moments& qry) const;

  /// Distance to the empirical distribution of `samples` (rows). When there are
  /// fewer samples than dimensions the trace term is taken from the n x n Gram
  /// matrix Y * cov * Y^T / n of the centered samples, which shares its nonzero
  /// spectrum with S * cov_q * S.
  double distance_to_samples(const Matrix& samples) const;

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  const Matrix& regularized_cov() const { return cov_; }

 private:
  Vector mean_;
  Matrix cov_;
  Matrix sqrt_cov_;
  double trace_ = 0.0;
};

/// Sum of sqrt(max(lambda, 0)) over the eigenvalues of a symmetric PSD matrix.
double trace_sqrt_psd(const Matrix& m);

}  // namespace sentinel
