#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sentinel/gateway.hpp"

namespace sentinel {

struct LabeledFeature {
  Vector feature;
  int label = -1;
};

struct CalibrationSetup {
  DetectorConfig detector;
  std::vector<Vector> seed_features;
  EngineOptions engine;
  std::string account = "calibration";
  /// Move the selected threshold up to the next observed finite score.
  bool nudge = true;
};

struct CalibrationPoint {
  double tau = 0.0;
  /// Defended accuracy; a poisoned response is correct when the random label
  /// happens to match.
  double accuracy = 0.0;
  /// Defended accuracy counting every poisoned response as an error. This is
  /// nondecreasing in tau and never exceeds `accuracy`.
  double strict_accuracy = 0.0;
  std::size_t poisoned = 0;
};

struct CalibrationReport {
  double gamma = 0.0;
  double acc_star = 0.0;
  double target = 0.0;
  /// Smallest candidate meeting the target, before the nudge.
  double tau_min = 0.0;
  double tau = 0.0;
  double achieved_acc = 0.0;
  std::size_t false_positives = 0;
  bool unachievable = false;
  std::size_t queries = 0;
  std::vector<CalibrationPoint> sweep;
};

/// Picks the threshold from a tolerated accuracy drop `gamma` on a labelled
/// benign stream replayed through one seeded account window.
///
/// Candidates are the distinct per-query scores of an undefended pass plus
/// +inf. The returned threshold is the smallest candidate whose strict
/// accuracy reaches acc* * (1 - gamma), nudged to the next finite candidate.
CalibrationReport calibrate_tau(const ReferenceModel& ref,
                                const std::vector<LabeledFeature>& benign_stream,
                                const Classifier& classifier, double gamma,
                                const CalibrationSetup& setup);

/// Accuracy of a fresh defended engine at threshold `tau` on the stream.
double simulate_defended_accuracy(const ReferenceModel& ref,
                                  const std::vector<LabeledFeature>& benign_stream,
                                  const Classifier& classifier, double tau,
                                  const CalibrationSetup& setup);

/// Key=value text form of the report (sweep excluded).
std::string format_report(const CalibrationReport& report);
/// tau,accuracy,strict_accuracy,poisoned
std::string format_sweep_csv(const CalibrationReport& report);

}  // namespace sentinel
