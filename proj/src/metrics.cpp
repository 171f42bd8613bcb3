#include "sentinel/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <sstream>

#include "sentinel/error.hpp"

namespace sentinel {
namespace {

struct Counts {
  std::size_t benign = 0;
  std::size_t malicious = 0;
};

Counts require_both(const ScoredStream& stream) {
  Counts c;
  for (const auto& q : stream) (q.is_benign ? c.benign : c.malicious)++;
  if (c.benign == 0 || c.malicious == 0) {
    throw Error(ErrorCode::MissingClass, "stream needs both benign and malicious queries");
  }
  return c;
}

std::vector<ScoredQuery> sorted_by_score(const ScoredStream& stream) {
  std::vector<ScoredQuery> out(stream.begin(), stream.end());
  std::sort(out.begin(), out.end(),
            [](const ScoredQuery& a, const ScoredQuery& b) { return a.score < b.score; });
  return out;
}

}  // namespace

ScoredStream make_scored_stream(std::span<const double> benign, std::span<const double> malicious) {
  ScoredStream out;
  out.reserve(benign.size() + malicious.size());
  for (double s : benign) out.push_back({s, true});
  for (double s : malicious) out.push_back({s, false});
  return out;
}

double fpr_at_tpr(const ScoredStream& stream, double tpr_target) {
  const auto counts = require_both(stream);
  if (!(tpr_target > 0.0 && tpr_target <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "tpr target must lie in (0, 1]");
  }
  std::vector<double> benign;
  benign.reserve(counts.benign);
  for (const auto& q : stream) {
    if (q.is_benign) benign.push_back(q.score);
  }
  std::sort(benign.begin(), benign.end());
  const auto nb = static_cast<double>(counts.benign);
  double threshold = benign.back();
  for (std::size_t k = 1; k <= benign.size(); ++k) {
    if (static_cast<double>(k) / nb >= tpr_target) {
      threshold = benign[k - 1];
      break;
    }
  }
  std::size_t accepted = 0;
  for (const auto& q : stream) {
    if (!q.is_benign && q.score <= threshold) ++accepted;
  }
  return static_cast<double>(accepted) / static_cast<double>(counts.malicious);
}

double auroc(const ScoredStream& stream) {
  const auto counts = require_both(stream);
  const auto sorted = sorted_by_score(stream);
  // Twice the Mann-Whitney count, kept integral so the result is exact.
  std::uint64_t twice = 0;
  std::size_t benign_below = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    std::size_t tie_benign = 0;
    std::size_t tie_malicious = 0;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      (sorted[j].is_benign ? tie_benign : tie_malicious)++;
      ++j;
    }
    twice += 2 * static_cast<std::uint64_t>(benign_below) * tie_malicious +
             static_cast<std::uint64_t>(tie_benign) * tie_malicious;
    benign_below += tie_benign;
    i = j;
  }
  return static_cast<double>(twice) /
         (2.0 * static_cast<double>(counts.benign) * static_cast<double>(counts.malicious));
}

std::vector<CurvePoint> roc_pr_points(const ScoredStream& stream) {
  const auto counts = require_both(stream);
  const auto sorted = sorted_by_score(stream);
  std::vector<CurvePoint> points;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      (sorted[j].is_benign ? tp : fp)++;
      ++j;
    }
    CurvePoint p;
    p.threshold = sorted[i].score;
    p.tpr = static_cast<double>(tp) / static_cast<double>(counts.benign);
    p.fpr = static_cast<double>(fp) / static_cast<double>(counts.malicious);
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    points.push_back(p);
    i = j;
  }
  return points;
}

double aupr(const ScoredStream& stream) {
  double area = 0.0;
  double prev_recall = 0.0;
  for (const auto& p : roc_pr_points(stream)) {
    area += (p.tpr - prev_recall) * p.precision;
    prev_recall = p.tpr;
  }
  return area;
}

double separation_gap(std::span<const double> benign, std::span<const double> malicious) {
  if (benign.empty() || malicious.empty()) {
    throw Error(ErrorCode::MissingClass, "separation gap needs both score sets");
  }
  return *std::min_element(malicious.begin(), malicious.end()) -
         *std::max_element(benign.begin(), benign.end());
}

std::string curve_csv(const std::vector<CurvePoint>& points) {
  std::ostringstream out;
  out.precision(17);
  out << "threshold,tpr,fpr,precision\n";
  for (const auto& p : points) {
    out << p.threshold << ',' << p.tpr << ',' << p.fpr << ',' << p.precision << '\n';
  }
  return out.str();
}

}  // namespace sentinel
