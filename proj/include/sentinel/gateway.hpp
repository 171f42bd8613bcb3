#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sentinel/account_windows.hpp"
#include "sentinel/detector.hpp"
#include "sentinel/reference_model.hpp"
#include "sentinel/rng.hpp"

namespace sentinel {

/// Output of the target model's classifier head for one feature.
struct Classification {
  int class_id = 0;
  std::vector<double> logits;
};

/// Must be deterministic and safe to call concurrently.
using Classifier = std::function<Classification(const Vector&)>;

enum class ResponseMode { Hard, Soft };

ResponseMode parse_response_mode(std::string_view text);
std::string_view response_mode_name(ResponseMode mode);

/// One-hot of the predicted class (hard) or softmax of the logits (soft).
std::vector<double> honest_response(const Classification& c, ResponseMode mode);

struct QueryRequest {
  std::string account_id;
  std::vector<Vector> features;
  ResponseMode response_mode = ResponseMode::Hard;
};

struct QueryResponse {
  std::vector<std::vector<double>> labels;
  std::vector<int> returned_class;
  std::vector<int> predicted_class;
  std::vector<bool> poisoned;
  /// One verdict per feature, in arrival order.
  std::vector<Verdict> verdicts;
  /// Verdict of the last feature in the request.
  Verdict verdict;
  std::int64_t latency_micros = 0;
};

struct EngineOptions {
  std::uint64_t seed = 0;
  /// 0 = unbounded.
  std::size_t max_accounts = 0;
  /// Soft mode only: poison with the uniform vector instead of a random one-hot.
  bool uniform_soft_poison = false;
  std::size_t latency_history = 1 << 16;
};

struct EngineStats {
  std::size_t accounts = 0;
  std::size_t window_bytes_per_account = 0;
  std::size_t total_window_bytes = 0;
  std::size_t queries_scored = 0;
  std::size_t evictions = 0;
  double p50_micros = 0.0;
  double p95_micros = 0.0;
  double p99_micros = 0.0;
};

/// Feature storage of one window: N * d 32-bit values.
constexpr std::size_t window_feature_bytes(std::size_t window_size, std::size_t dim) {
  return window_size * dim * sizeof(float);
}

/// Classify, push into the account window, score, and poison flagged queries.
class Engine {
 public:
  /// `seed_features` are training features used for cold-start window fills;
  /// they are labelled with the classifier's prediction.
  Engine(ReferenceModel reference, DetectorConfig config, Classifier classifier,
         const std::vector<Vector>& seed_features, EngineOptions options = {});

  QueryResponse handle_query(const QueryRequest& request);

  /// Replaces the account's window with one filled from `features` (classified
  /// on the way in) instead of training seeds.
  void prefill_window(const std::string& account_id, const std::vector<Vector>& features);

  void set_threshold(double tau);

  EngineStats stats() const;

  const ReferenceModel& reference() const { return reference_; }
  const DetectorConfig& config() const { return config_; }
  const WindowScorer& scorer() const { return scorer_; }
  const Classifier& classifier() const { return classifier_; }
  WindowStore& windows() { return store_; }

 private:
  Classification classify(const Vector& feature) const;
  double score_window(const AccountWindow& window, const Classification& c) const;
  void record_latency(double micros);

  ReferenceModel reference_;
  DetectorConfig config_;
  Classifier classifier_;
  EngineOptions options_;
  WindowScorer scorer_;
  WindowStore store_;

  std::mutex poison_mu_;
  Rng poison_rng_;

  mutable std::mutex latency_mu_;
  std::vector<double> latencies_;
  std::size_t latency_next_ = 0;
  std::size_t scored_ = 0;
};

}  // namespace sentinel
