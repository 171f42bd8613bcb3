#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "sentinel/account_windows.hpp"
#include "sentinel/reference_model.hpp"
#include "sentinel/tensor_stats.hpp"

namespace sentinel {

/// ADD weights class-wise distances by class share, EW sums them unweighted,
/// GDD uses one distance on pooled statistics. MSP and Energy score the
/// current query's logits only and ignore the window.
enum class Variant { ADD, EW, GDD, MSP, Energy };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view text);
bool is_window_variant(Variant v);

struct DetectorConfig {
  Variant variant = Variant::ADD;
  std::size_t window_size = 64;
  double threshold = std::numeric_limits<double>::infinity();
  double epsilon = kDefaultEpsilon;
  double energy_temperature = 1.0;
};

struct Verdict {
  double score = 0.0;
  double threshold = 0.0;
  bool is_malicious = false;
  Variant variant = Variant::ADD;
  std::size_t window_len = 0;
};

/// Scores windows against a reference. Regularized reference covariances are
/// computed once at construction.
class WindowScorer {
 public:
  WindowScorer(const ReferenceModel& ref, double epsilon = kDefaultEpsilon);

  /// Sum over present classes of (|X_c| / N) * d_c.
  double score_add(const AccountWindow& window) const;
  /// Sum over present classes of d_c.
  double score_ew(const AccountWindow& window) const;
  /// One distance between pooled window features and the pooled training distribution.
  double score_gdd(const AccountWindow& window) const;

  double score(Variant v, const AccountWindow& window) const;

  /// Distance of one class group (rows) to that class's reference.
  double class_distance(int class_id, const Matrix& samples) const;

  std::size_t dim() const { return dim_; }
  std::size_t num_classes() const { return classes_.size(); }

 private:
  double weighted(const AccountWindow& window, bool by_share) const;

  std::size_t dim_;
  std::vector<FrechetReference> classes_;
  FrechetReference global_;
};

double score_add(const ReferenceModel& ref, const AccountWindow& window,
                 double epsilon = kDefaultEpsilon);
double score_ew(const ReferenceModel& ref, const AccountWindow& window,
                double epsilon = kDefaultEpsilon);
double score_gdd(const Moments& ref_global, const AccountWindow& window,
                 double epsilon = kDefaultEpsilon);

/// 1 - max_k p_k, so that higher means more suspicious.
double score_msp(std::span<const double> probs);

/// -T * log sum_k exp(logit_k / T).
double score_energy(std::span<const double> logits, double temperature = 1.0);

/// Malicious iff score > threshold; a tie is benign.
Verdict apply_threshold(double score, const DetectorConfig& config);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace sentinel
