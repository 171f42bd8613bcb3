#include "sentinel/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sentinel/error.hpp"

namespace sentinel {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Trace {
  std::vector<double> scores;
  std::vector<int> predicted;
  std::vector<int> truth;
};

std::unique_ptr<Engine> make_engine(const ReferenceModel& ref, const Classifier& classifier,
                                    double tau, const CalibrationSetup& setup) {
  DetectorConfig cfg = setup.detector;
  cfg.threshold = tau;
  return std::make_unique<Engine>(ref, cfg, classifier, setup.seed_features, setup.engine);
}

Trace undefended_trace(const ReferenceModel& ref, const std::vector<LabeledFeature>& stream,
                       const Classifier& classifier, const CalibrationSetup& setup) {
  auto engine = make_engine(ref, classifier, kInf, setup);
  Trace t;
  for (const auto& q : stream) {
    const auto resp = engine->handle_query({setup.account, {q.feature}, ResponseMode::Hard});
    t.scores.push_back(resp.verdict.score);
    t.predicted.push_back(resp.predicted_class.front());
    t.truth.push_back(q.label);
  }
  return t;
}

// Mirrors the engine's poisoning stream: one draw per flagged query, in order.
CalibrationPoint replay(const Trace& t, double tau, int num_classes, std::uint64_t seed) {
  Rng rng = make_rng(seed, "poisoning");
  CalibrationPoint p;
  p.tau = tau;
  std::size_t correct = 0;
  std::size_t strict = 0;
  for (std::size_t i = 0; i < t.scores.size(); ++i) {
    if (t.scores[i] > tau) {
      ++p.poisoned;
      const int fake = std::uniform_int_distribution<int>(0, num_classes - 1)(rng);
      if (fake == t.truth[i]) ++correct;
    } else if (t.predicted[i] == t.truth[i]) {
      ++correct;
      ++strict;
    }
  }
  const auto n = static_cast<double>(t.scores.size());
  p.accuracy = static_cast<double>(correct) / n;
  p.strict_accuracy = static_cast<double>(strict) / n;
  return p;
}

}  // namespace

CalibrationReport calibrate_tau(const ReferenceModel& ref,
                                const std::vector<LabeledFeature>& benign_stream,
                                const Classifier& classifier, double gamma,
                                const CalibrationSetup& setup) {
  if (benign_stream.empty()) {
    throw Error(ErrorCode::EmptyStream, "calibration stream is empty");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma must lie in [0, 1)");
  }
  for (const auto& q : benign_stream) {
    if (q.label < 0 || static_cast<std::size_t>(q.label) >= ref.num_classes()) {
      throw Error(ErrorCode::LabelOutOfRange, "calibration queries need ground-truth labels");
    }
  }
  const Trace trace = undefended_trace(ref, benign_stream, classifier, setup);

  std::vector<double> candidates = trace.scores;
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  candidates.push_back(kInf);

  const int k = static_cast<int>(ref.num_classes());
  CalibrationReport report;
  report.gamma = gamma;
  report.queries = benign_stream.size();
  report.sweep.reserve(candidates.size());
  for (double tau : candidates) report.sweep.push_back(replay(trace, tau, k, setup.engine.seed));

  report.acc_star = report.sweep.back().accuracy;
  report.target = report.acc_star * (1.0 - gamma);
  std::size_t pick = candidates.size() - 1;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (report.sweep[i].strict_accuracy >= report.target) {
      pick = i;
      break;
    }
  }
  report.tau_min = candidates[pick];
  report.unachievable = !std::isfinite(report.tau_min);
  if (setup.nudge && pick + 1 < candidates.size() && std::isfinite(candidates[pick + 1])) {
    ++pick;
  }
  report.tau = candidates[pick];
  report.achieved_acc = report.sweep[pick].accuracy;
  report.false_positives = report.sweep[pick].poisoned;
  return report;
}

double simulate_defended_accuracy(const ReferenceModel& ref,
                                  const std::vector<LabeledFeature>& benign_stream,
                                  const Classifier& classifier, double tau,
                                  const CalibrationSetup& setup) {
  if (benign_stream.empty()) {
    throw Error(ErrorCode::EmptyStream, "stream is empty");
  }
  auto engine = make_engine(ref, classifier, tau, setup);
  std::size_t correct = 0;
  for (const auto& q : benign_stream) {
    const auto resp = engine->handle_query({setup.account, {q.feature}, ResponseMode::Hard});
    if (resp.returned_class.front() == q.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(benign_stream.size());
}

std::string format_report(const CalibrationReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "gamma=" << r.gamma << '\n'
      << "acc_star=" << r.acc_star << '\n'
      << "target=" << r.target << '\n'
      << "tau_min=" << r.tau_min << '\n'
      << "tau=" << r.tau << '\n'
      << "achieved_acc=" << r.achieved_acc << '\n'
      << "false_positives=" << r.false_positives << '\n'
      << "queries=" << r.queries << '\n'
      << "candidates=" << r.sweep.size() << '\n'
      << "unachievable=" << (r.unachievable ? "true" : "false") << '\n';
  return out.str();
}

std::string format_sweep_csv(const CalibrationReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "tau,accuracy,strict_accuracy,poisoned\n";
  for (const auto& p : r.sweep) {
    out << p.tau << ',' << p.accuracy << ',' << p.strict_accuracy << ',' << p.poisoned << '\n';
  }
  return out.str();
}

}  // namespace sentinel
