#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sentinel/gateway.hpp"
#include "sentinel/tensor_stats.hpp"

namespace sentinel {

/// Multivariate normal with a cached Cholesky factor for sampling.
struct Gaussian {
  Vector mean;
  Matrix cov;
  Matrix chol;  // lower, cov = chol * chol^T

  Vector sample(Rng& rng) const;
};

/// K training-class generators plus K' surrogate generators standing in for
/// an attacker's out-of-distribution data.
struct SyntheticWorld {
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  double separation = 0.0;
  /// sqrt(mean of tr(cov) / d) over all generators before cov_scale.
  double avg_std = 0.0;
  std::vector<Gaussian> training;
  std::vector<Gaussian> surrogate;

  std::size_t num_classes() const { return training.size(); }
};

struct WorldOptions {
  /// Multiplies every generator covariance after the means are placed, which
  /// only widens the effective separation. Must lie in (0, 1].
  double cov_scale = 1.0;
  /// When positive, each surrogate mean is placed this many avg_std away from
  /// a randomly chosen training mean (a near, harder attacker). Must be at
  /// least `separation`.
  double surrogate_radius = 0.0;
  int max_restarts = 200;
  int tries_per_mean = 2000;
};

/// Covariances are A * A^T / d + 0.1 * I with standard-normal A. Means are
/// rejection-sampled so every training/training and training/surrogate pair
/// is at least `separation * avg_std` apart.
SyntheticWorld make_world(std::size_t dim, std::size_t num_classes, std::size_t num_surrogate,
                          double separation, std::uint64_t seed, const WorldOptions& options = {});

enum class StreamKind { BenignId, BenignShift, Malicious, AdaptiveMix };

std::string_view stream_kind_name(StreamKind kind);
StreamKind parse_stream_kind(std::string_view text);

struct StreamSpec {
  StreamKind kind = StreamKind::BenignId;
  std::size_t length = 0;
  /// BenignShift: added to every feature (empty = no shift).
  Vector shift;
  /// BenignShift: classes to sample from (empty = all classes).
  std::vector<int> class_subset;
  /// AdaptiveMix: number of benign-looking samples H.
  std::size_t bl_budget = 0;
  /// AdaptiveMix: minimum benign-looking percentage x in (0, 100].
  double evasion_percent = 10.0;
  /// Distinguishes independent streams drawn from one world.
  std::uint64_t seed = 0;
};

/// ceil(100 / x) - 1 malicious-looking samples follow each benign-looking one.
std::size_t adaptive_period_ml(double evasion_percent);

/// Missed-query count of the mixing attack: H * min(N, M + 1).
std::size_t expected_missed(std::size_t bl_budget, double evasion_percent, std::size_t window_size);

struct StreamItem {
  Vector feature;
  int truth = -1;  // -1 for surrogate samples
  bool is_malicious = false;
  bool benign_looking = false;
};

std::vector<StreamItem> gen_stream(const SyntheticWorld& world, const StreamSpec& spec);

/// Quadratic discriminant with uniform priors: logit_k is the log density of
/// N(mean_k, cov_k) at the feature.
class GaussianDiscriminant {
 public:
  GaussianDiscriminant(const std::vector<Vector>& means, const std::vector<Matrix>& covs,
                       double ridge = 0.0);
  explicit GaussianDiscriminant(const SyntheticWorld& world);

  Classification classify(const Vector& feature) const;
  std::size_t num_classes() const { return means_.size(); }

 private:
  std::vector<Vector> means_;
  std::vector<Eigen::LLT<Matrix>> factors_;
  std::vector<double> log_norm_;
};

Classification classify_gd(const SyntheticWorld& world, const Vector& feature);

/// Wraps a shared discriminant as an engine classifier.
Classifier make_classifier(std::shared_ptr<const GaussianDiscriminant> gd);

/// Surrogate samples used to pre-fill the attacker's window.
std::vector<Vector> adaptive_prefill(const SyntheticWorld& world, const StreamSpec& spec,
                                     std::size_t count);

struct PremiseProbe {
  double floor = 0.0;    // lowest score of a window without benign-looking entries
  double ceiling = 0.0;  // highest score of a window with at least one
  double threshold = 0.0;
};

/// Runs the adaptive stream undefended and places the threshold midway between
/// the pure-malicious floor and the mixed-window ceiling. Throws
/// PremiseViolated when the two overlap.
PremiseProbe probe_premise(const SyntheticWorld& world, Engine& engine, const StreamSpec& spec);

/// Runs the adaptive stream through `engine` (window pre-filled with surrogate
/// samples) and counts queries judged benign. Every verdict is checked against
/// the premise "flagged iff the window holds no benign-looking entry".
std::size_t count_missed(const SyntheticWorld& world, Engine& engine, const StreamSpec& spec);

}  // namespace sentinel
