#pragma once

#include <span>
#include <string>
#include <vector>

namespace sentinel {

/// One scored query. Benign queries are the positive class and every detector
/// emits higher-is-malicious scores, so "predicted positive" means score <= t.
struct ScoredQuery {
  double score = 0.0;
  bool is_benign = false;
};

using ScoredStream = std::vector<ScoredQuery>;

ScoredStream make_scored_stream(std::span<const double> benign, std::span<const double> malicious);

/// Fraction of malicious queries accepted at the smallest threshold that
/// accepts at least `tpr_target` of the benign queries.
double fpr_at_tpr(const ScoredStream& stream, double tpr_target = 0.95);

/// P(benign score < malicious score) with ties counted one half.
double auroc(const ScoredStream& stream);

/// Step-wise area under the precision-recall curve over all distinct thresholds.
double aupr(const ScoredStream& stream);

/// min(malicious) - max(benign).
double separation_gap(std::span<const double> benign, std::span<const double> malicious);

struct CurvePoint {
  double threshold = 0.0;
  double tpr = 0.0;  // recall
  double fpr = 0.0;
  double precision = 0.0;
};

/// One point per distinct score, ascending threshold.
std::vector<CurvePoint> roc_pr_points(const ScoredStream& stream);

std::string curve_csv(const std::vector<CurvePoint>& points);

}  // namespace sentinel
