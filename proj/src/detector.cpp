#include "sentinel/detector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sentinel/error.hpp"

namespace sentinel {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::ADD: return "add";
    case Variant::EW: return "ew";
    case Variant::GDD: return "gdd";
    case Variant::MSP: return "msp";
    case Variant::Energy: return "energy";
  }
  return "unknown";
}

Variant parse_variant(std::string_view text) {
  for (Variant v : {Variant::ADD, Variant::EW, Variant::GDD, Variant::MSP, Variant::Energy}) {
    if (text == variant_name(v)) return v;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown variant '" + std::string(text) + "'");
}

bool is_window_variant(Variant v) {
  return v == Variant::ADD || v == Variant::EW || v == Variant::GDD;
}

WindowScorer::WindowScorer(const ReferenceModel& ref, double epsilon)
    : dim_(ref.dim()), global_(ref.global(), epsilon) {
  classes_.reserve(ref.num_classes());
  for (const auto& stats : ref.classes()) classes_.emplace_back(stats, epsilon);
}

double WindowScorer::class_distance(int class_id, const Matrix& samples) const {
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= classes_.size()) {
    throw Error(ErrorCode::UnknownClassId, "window holds class " + std::to_string(class_id) +
                                               " but the reference has " +
                                               std::to_string(classes_.size()) + " classes");
  }
  return classes_[static_cast<std::size_t>(class_id)].distance_to_samples(samples);
}

double WindowScorer::weighted(const AccountWindow& window, bool by_share) const {
  if (window.size() == 0) {
    throw Error(ErrorCode::EmptySampleSet, "cannot score an empty window");
  }
  if (window.dim() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "window dimension " + std::to_string(window.dim()) +
                                                  " vs reference " + std::to_string(dim_));
  }
  const auto groups = partition_by_class(window);
  // Weights use the window length, which equals N once the window is full.
  const auto n = static_cast<double>(window.size());
  double total = 0.0;
  for (const auto& [class_id, samples] : groups) {
    const double dist = class_distance(class_id, samples);
    total += by_share ? (static_cast<double>(samples.rows()) / n) * dist : dist;
  }
  return total;
}

double WindowScorer::score_add(const AccountWindow& window) const { return weighted(window, true); }

double WindowScorer::score_ew(const AccountWindow& window) const { return weighted(window, false); }

double WindowScorer::score_gdd(const AccountWindow& window) const {
  if (window.size() == 0) {
    throw Error(ErrorCode::EmptySampleSet, "cannot score an empty window");
  }
  if (window.dim() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "window dimension " + std::to_string(window.dim()) +
                                                  " vs reference " + std::to_string(dim_));
  }
  return global_.distance_to_samples(window.features());
}

double WindowScorer::score(Variant v, const AccountWindow& window) const {
  switch (v) {
    case Variant::ADD: return score_add(window);
    case Variant::EW: return score_ew(window);
    case Variant::GDD: return score_gdd(window);
    default:
      throw Error(ErrorCode::InvalidArgument,
                  std::string(variant_name(v)) + " does not score windows");
  }
}

double score_add(const ReferenceModel& ref, const AccountWindow& window, double epsilon) {
  return WindowScorer(ref, epsilon).score_add(window);
}

double score_ew(const ReferenceModel& ref, const AccountWindow& window, double epsilon) {
  return WindowScorer(ref, epsilon).score_ew(window);
}

double score_gdd(const Moments& ref_global, const AccountWindow& window, double epsilon) {
  if (ref_global.dim() != window.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "window dimension " + std::to_string(window.dim()) +
                                                  " vs reference " +
                                                  std::to_string(ref_global.dim()));
  }
  if (window.size() == 0) {
    throw Error(ErrorCode::EmptySampleSet, "cannot score an empty window");
  }
  return FrechetReference(ref_global, epsilon).distance_to_samples(window.features());
}

double score_msp(std::span<const double> probs) {
  if (probs.empty()) {
    throw Error(ErrorCode::NotADistribution, "empty probability vector");
  }
  double sum = 0.0;
  double best = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::NotADistribution, "negative or non-finite probability");
    }
    sum += p;
    best = std::max(best, p);
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::NotADistribution, "probabilities sum to " + std::to_string(sum));
  }
  return 1.0 - best;
}

double score_energy(std::span<const double> logits, double temperature) {
  if (logits.empty()) {
    throw Error(ErrorCode::InvalidArgument, "empty logit vector");
  }
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(top)) {
    throw Error(ErrorCode::NumericFailure, "non-finite logits");
  }
  double acc = 0.0;
  for (double l : logits) acc += std::exp((l - top) / temperature);
  return -(top + temperature * std::log(acc));
}

Verdict apply_threshold(double score, const DetectorConfig& config) {
  Verdict v;
  v.score = score;
  v.threshold = config.threshold;
  v.is_malicious = score > config.threshold;
  v.variant = config.variant;
  return v;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - top);
    sum += out[k];
  }
  for (auto& p : out) p /= sum;
  return out;
}

}  // namespace sentinel
