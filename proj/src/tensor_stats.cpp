#include "sentinel/tensor_stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sentinel/error.hpp"

namespace sentinel {
namespace {

void require_finite(const Matrix& samples) {
  if (!samples.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "samples contain NaN or Inf");
  }
}

double combine(double mean_gap, double trace_ref, double trace_qry, double trace_sqrt) {
  const double value = mean_gap + trace_ref + trace_qry - 2.0 * trace_sqrt;
  const double scale = std::max(1.0, mean_gap + trace_ref + trace_qry);
  if (!std::isfinite(value) || value < -1e-6 * scale) {
    throw Error(ErrorCode::NumericFailure,
                "frechet distance evaluated to " + std::to_string(value));
  }
  return std::max(0.0, value);
}

}  // namespace

Moments estimate_moments(const Matrix& samples) {
  if (samples.rows() == 0) {
    throw Error(ErrorCode::EmptySampleSet, "no samples");
  }
  require_finite(samples);
  const auto n = static_cast<double>(samples.rows());
  Moments out;
  out.count = static_cast<std::size_t>(samples.rows());
  out.mean = samples.colwise().sum().transpose() / n;
  const Matrix centered = samples.rowwise() - out.mean.transpose();
  out.cov = (centered.transpose() * centered) / n;
  return out;
}

Moments estimate_moments(std::span<const Vector> samples) {
  if (samples.empty()) {
    throw Error(ErrorCode::EmptySampleSet, "no samples");
  }
  const auto d = samples.front().size();
  Matrix rows(static_cast<Eigen::Index>(samples.size()), d);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].size() != d) {
      throw Error(ErrorCode::DimensionMismatch,
                  "sample " + std::to_string(i) + " has dimension " +
                      std::to_string(samples[i].size()) + ", expected " + std::to_string(d));
    }
    rows.row(static_cast<Eigen::Index>(i)) = samples[i].transpose();
  }
  return estimate_moments(rows);
}

Moments pool_moments(std::span<const Moments> parts) {
  std::size_t total = 0;
  for (const auto& p : parts) total += p.count;
  if (total == 0) {
    throw Error(ErrorCode::EmptySampleSet, "pooling zero samples");
  }
  const auto d = parts.front().mean.size();
  Moments out;
  out.count = total;
  out.mean = Vector::Zero(d);
  for (const auto& p : parts) {
    if (p.mean.size() != d) {
      throw Error(ErrorCode::DimensionMismatch, "pooled moments disagree on dimension");
    }
    out.mean += static_cast<double>(p.count) * p.mean;
  }
  out.mean /= static_cast<double>(total);
  out.cov = Matrix::Zero(d, d);
  for (const auto& p : parts) {
    if (p.count == 0) continue;
    const Vector gap = p.mean - out.mean;
    out.cov += static_cast<double>(p.count) * (p.cov + gap * gap.transpose());
  }
  out.cov /= static_cast<double>(total);
  return out;
}

Matrix sqrtm_psd(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "matrix is not square");
  }
  if (!m.allFinite()) {
    throw Error(ErrorCode::NumericFailure, "matrix contains NaN or Inf");
  }
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance) {
    throw Error(ErrorCode::NotSymmetric, "max |m - m^T| = " + std::to_string(asym));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericFailure, "eigendecomposition did not converge");
  }
  Vector values = eig.eigenvalues();
  if (values.size() > 0 && values.minCoeff() < -kEigenClampTolerance) {
    throw Error(ErrorCode::IndefiniteMatrix,
                "smallest eigenvalue " + std::to_string(values.minCoeff()));
  }
  values = values.cwiseMax(0.0).cwiseSqrt();
  const Matrix& v = eig.eigenvectors();
  Matrix root = v * values.asDiagonal() * v.transpose();
  return 0.5 * (root + root.transpose());
}

namespace {

// Skips the `skip` smallest eigenvalues, which the caller knows are zero.
double trace_sqrt_spectrum(const Matrix& m, Eigen::Index skip) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericFailure, "eigendecomposition did not converge");
  }
  const Vector& values = eig.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double lambda = values[i];
    if (lambda < -kEigenClampTolerance * scale) {
      throw Error(ErrorCode::IndefiniteMatrix,
                  "product spectrum has eigenvalue " + std::to_string(lambda));
    }
    if (i >= skip && lambda > 0.0) sum += std::sqrt(lambda);
  }
  return sum;
}

}  // namespace

double trace_sqrt_psd(const Matrix& m) { return trace_sqrt_spectrum(m, 0); }

double frechet_distance(const Moments& ref, const Moments& qry, double epsilon) {
  return FrechetReference(ref, epsilon).distance(qry);
}

FrechetReference::FrechetReference(const Moments& ref, double epsilon) {
  if (ref.count == 0) {
    throw Error(ErrorCode::EmptySampleSet, "reference moments have zero count");
  }
  if (epsilon < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "epsilon must be nonnegative");
  }
  const auto d = ref.mean.size();
  if (ref.cov.rows() != d || ref.cov.cols() != d) {
    throw Error(ErrorCode::DimensionMismatch, "reference covariance shape disagrees with mean");
  }
  mean_ = ref.mean;
  cov_ = ref.cov + epsilon * Matrix::Identity(d, d);
  sqrt_cov_ = sqrtm_psd(cov_);
  trace_ = cov_.trace();
}

double FrechetReference::distance(const Moments& qry) const {
  if (qry.count == 0) {
    throw Error(ErrorCode::EmptySampleSet, "query moments have zero count");
  }
  if (qry.mean.size() != mean_.size() || qry.cov.rows() != mean_.size() ||
      qry.cov.cols() != mean_.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "reference dimension " + std::to_string(mean_.size()) + ", query dimension " +
                    std::to_string(qry.mean.size()));
  }
  Matrix product = sqrt_cov_ * qry.cov * sqrt_cov_;
  product = 0.5 * (product + product.transpose());
  return combine((mean_ - qry.mean).squaredNorm(), trace_, qry.cov.trace(),
                 trace_sqrt_psd(product));
}

double FrechetReference::distance_to_samples(const Matrix& samples) const {
  if (samples.rows() == 0) {
    throw Error(ErrorCode::EmptySampleSet, "no query samples");
  }
  if (samples.cols() != mean_.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "reference dimension " + std::to_string(mean_.size()) + ", query dimension " +
                    std::to_string(samples.cols()));
  }
  if (samples.rows() > samples.cols()) {
    return distance(estimate_moments(samples));
  }
  require_finite(samples);
  const auto n = static_cast<double>(samples.rows());
  const Vector mean = samples.colwise().sum().transpose() / n;
  const Matrix centered = samples.rowwise() - mean.transpose();
  Matrix gram = (centered * cov_ * centered.transpose()) / n;
  gram = 0.5 * (gram + gram.transpose());
  // Centered rows sum to zero, so the all-ones vector spans part of the null
  // space and the smallest eigenvalue is exactly zero.
  return combine((mean_ - mean).squaredNorm(), trace_, centered.squaredNorm() / n,
                 trace_sqrt_spectrum(gram, 1));
}

}  // namespace sentinel
