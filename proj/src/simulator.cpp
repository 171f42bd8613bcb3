#include "sentinel/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "sentinel/error.hpp"

namespace sentinel {
namespace {

Vector standard_normal(Rng& rng, std::size_t dim) {
  std::normal_distribution<double> z(0.0, 1.0);
  Vector out(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = z(rng);
  return out;
}

Matrix random_covariance(Rng& rng, std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = z(rng);
  }
  Matrix cov = a * a.transpose() / static_cast<double>(dim) + 0.1 * Matrix::Identity(d, d);
  return 0.5 * (cov + cov.transpose());
}

Gaussian make_gaussian(Vector mean, Matrix cov) {
  Gaussian g;
  g.mean = std::move(mean);
  g.cov = std::move(cov);
  Eigen::LLT<Matrix> llt(g.cov);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericFailure, "generator covariance is not positive definite");
  }
  g.chol = llt.matrixL();
  return g;
}

}  // namespace

Vector Gaussian::sample(Rng& rng) const {
  return mean + chol * standard_normal(rng, static_cast<std::size_t>(mean.size()));
}

SyntheticWorld make_world(std::size_t dim, std::size_t num_classes, std::size_t num_surrogate,
                          double separation, std::uint64_t seed, const WorldOptions& options) {
  if (dim == 0 || num_classes == 0 || num_surrogate == 0) {
    throw Error(ErrorCode::InvalidArgument, "dim, classes and surrogate classes must be >= 1");
  }
  if (!(separation > 0.0) || !std::isfinite(separation)) {
    throw Error(ErrorCode::InvalidArgument, "separation must be positive and finite");
  }
  if (!(options.cov_scale > 0.0 && options.cov_scale <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "cov_scale must lie in (0, 1]");
  }
  if (options.surrogate_radius != 0.0 && !(options.surrogate_radius >= separation)) {
    throw Error(ErrorCode::InvalidArgument, "surrogate_radius must be 0 or >= separation");
  }
  Rng rng = make_rng(seed, "world");
  const std::size_t total = num_classes + num_surrogate;
  std::vector<Matrix> covs;
  covs.reserve(total);
  double trace_sum = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    covs.push_back(random_covariance(rng, dim));
    trace_sum += covs.back().trace();
  }
  const double avg_std = std::sqrt(trace_sum / static_cast<double>(total * dim));
  const double min_dist = separation * avg_std;
  const double spread =
      min_dist * std::max(1.0, std::pow(static_cast<double>(total), 1.0 / static_cast<double>(dim)));

  std::vector<Vector> means;
  bool placed = false;
  for (int restart = 0; restart < options.max_restarts && !placed; ++restart) {
    means.clear();
    placed = true;
    for (std::size_t i = 0; i < total && placed; ++i) {
      const bool is_training = i < num_classes;
      bool ok = false;
      for (int attempt = 0; attempt < options.tries_per_mean && !ok; ++attempt) {
        Vector candidate;
        if (!is_training && options.surrogate_radius > 0.0) {
          const auto anchor = std::uniform_int_distribution<std::size_t>(0, num_classes - 1)(rng);
          candidate = means[anchor] + options.surrogate_radius * avg_std *
                                          standard_normal(rng, dim).normalized();
        } else {
          candidate = spread * standard_normal(rng, dim);
        }
        ok = true;
        for (std::size_t j = 0; j < means.size() && ok; ++j) {
          // Surrogate generators only need to keep away from training classes.
          const bool constrained = is_training || j < num_classes;
          if (constrained && (candidate - means[j]).norm() < min_dist) ok = false;
        }
        if (ok) means.push_back(std::move(candidate));
      }
      placed = ok;
    }
  }
  if (!placed) {
    throw Error(ErrorCode::SeparationInfeasible,
                "could not place " + std::to_string(total) + " means at separation " +
                    std::to_string(separation));
  }

  SyntheticWorld world;
  world.dim = dim;
  world.seed = seed;
  world.separation = separation;
  world.avg_std = avg_std;
  for (std::size_t i = 0; i < total; ++i) {
    Gaussian g = make_gaussian(means[i], options.cov_scale * covs[i]);
    (i < num_classes ? world.training : world.surrogate).push_back(std::move(g));
  }
  return world;
}

std::string_view stream_kind_name(StreamKind kind) {
  switch (kind) {
    case StreamKind::BenignId: return "benign_id";
    case StreamKind::BenignShift: return "benign_shift";
    case StreamKind::Malicious: return "malicious";
    case StreamKind::AdaptiveMix: return "adaptive_mix";
  }
  return "unknown";
}

StreamKind parse_stream_kind(std::string_view text) {
  for (auto k : {StreamKind::BenignId, StreamKind::BenignShift, StreamKind::Malicious,
                 StreamKind::AdaptiveMix}) {
    if (text == stream_kind_name(k)) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown stream kind '" + std::string(text) + "'");
}

std::size_t adaptive_period_ml(double evasion_percent) {
  if (!(evasion_percent > 0.0 && evasion_percent <= 100.0)) {
    throw Error(ErrorCode::InvalidArgument, "evasion percentage must lie in (0, 100]");
  }
  // The small slack keeps exact quotients such as 100 / 10 from rounding up.
  return static_cast<std::size_t>(std::ceil(100.0 / evasion_percent - 1e-9)) - 1;
}

std::size_t expected_missed(std::size_t bl_budget, double evasion_percent, std::size_t window_size) {
  const std::size_t m = adaptive_period_ml(evasion_percent);
  return window_size <= m ? window_size * bl_budget : (1 + m) * bl_budget;
}

std::vector<StreamItem> gen_stream(const SyntheticWorld& world, const StreamSpec& spec) {
  Rng rng = make_rng(world.seed ^ (spec.seed * 0x9E3779B97F4A7C15ULL),
                     "stream/" + std::string(stream_kind_name(spec.kind)));
  const auto k = world.training.size();
  const auto kp = world.surrogate.size();
  std::vector<StreamItem> out;

  auto pick = [&rng](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };

  switch (spec.kind) {
    case StreamKind::BenignId: {
      out.reserve(spec.length);
      for (std::size_t i = 0; i < spec.length; ++i) {
        const auto c = pick(k);
        out.push_back({world.training[c].sample(rng), static_cast<int>(c), false, false});
      }
      break;
    }
    case StreamKind::BenignShift: {
      if (spec.class_subset.empty() && spec.shift.size() == 0) {
        throw Error(ErrorCode::InvalidSubset, "benign_shift needs a shift or a class subset");
      }
      if (spec.shift.size() != 0 && static_cast<std::size_t>(spec.shift.size()) != world.dim) {
        throw Error(ErrorCode::DimensionMismatch, "shift vector has wrong dimension");
      }
      std::vector<int> classes = spec.class_subset;
      if (classes.empty()) {
        for (std::size_t c = 0; c < k; ++c) classes.push_back(static_cast<int>(c));
      }
      for (int c : classes) {
        if (c < 0 || static_cast<std::size_t>(c) >= k) {
          throw Error(ErrorCode::InvalidSubset, "class " + std::to_string(c) + " not in world");
        }
      }
      out.reserve(spec.length);
      for (std::size_t i = 0; i < spec.length; ++i) {
        const int c = classes[pick(classes.size())];
        Vector x = world.training[static_cast<std::size_t>(c)].sample(rng);
        if (spec.shift.size() != 0) x += spec.shift;
        out.push_back({std::move(x), c, false, false});
      }
      break;
    }
    case StreamKind::Malicious: {
      out.reserve(spec.length);
      for (std::size_t i = 0; i < spec.length; ++i) {
        out.push_back({world.surrogate[pick(kp)].sample(rng), -1, true, false});
      }
      break;
    }
    case StreamKind::AdaptiveMix: {
      const std::size_t m = adaptive_period_ml(spec.evasion_percent);
      out.reserve(spec.bl_budget * (1 + m));
      for (std::size_t h = 0; h < spec.bl_budget; ++h) {
        const auto c = pick(k);
        out.push_back({world.training[c].sample(rng), static_cast<int>(c), true, true});
        for (std::size_t j = 0; j < m; ++j) {
          out.push_back({world.surrogate[pick(kp)].sample(rng), -1, true, false});
        }
      }
      break;
    }
  }
  return out;
}

GaussianDiscriminant::GaussianDiscriminant(const std::vector<Vector>& means,
                                           const std::vector<Matrix>& covs, double ridge)
    : means_(means) {
  if (means.empty() || means.size() != covs.size()) {
    throw Error(ErrorCode::InvalidArgument, "discriminant needs one covariance per mean");
  }
  const auto d = means.front().size();
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (means[k].size() != d || covs[k].rows() != d || covs[k].cols() != d) {
      throw Error(ErrorCode::DimensionMismatch, "discriminant class " + std::to_string(k));
    }
    Eigen::LLT<Matrix> llt(covs[k] + ridge * Matrix::Identity(d, d));
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::NumericFailure,
                  "class " + std::to_string(k) + " covariance is not positive definite");
    }
    const Matrix l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    log_norm_.push_back(-0.5 * (log_det + static_cast<double>(d) * std::log(2.0 * std::numbers::pi)));
    factors_.push_back(std::move(llt));
  }
}

namespace {

std::vector<Vector> world_means(const SyntheticWorld& w) {
  std::vector<Vector> out;
  for (const auto& g : w.training) out.push_back(g.mean);
  return out;
}

std::vector<Matrix> world_covs(const SyntheticWorld& w) {
  std::vector<Matrix> out;
  for (const auto& g : w.training) out.push_back(g.cov);
  return out;
}

}  // namespace

GaussianDiscriminant::GaussianDiscriminant(const SyntheticWorld& world)
    : GaussianDiscriminant(world_means(world), world_covs(world)) {}

Classification GaussianDiscriminant::classify(const Vector& feature) const {
  if (feature.size() != means_.front().size()) {
    throw Error(ErrorCode::DimensionMismatch, "feature dimension " + std::to_string(feature.size()));
  }
  Classification out;
  out.logits.resize(means_.size());
  for (std::size_t k = 0; k < means_.size(); ++k) {
    const Vector z = factors_[k].matrixL().solve(feature - means_[k]);
    out.logits[k] = log_norm_[k] - 0.5 * z.squaredNorm();
  }
  out.class_id = static_cast<int>(std::max_element(out.logits.begin(), out.logits.end()) -
                                  out.logits.begin());
  return out;
}

Classification classify_gd(const SyntheticWorld& world, const Vector& feature) {
  return GaussianDiscriminant(world).classify(feature);
}

Classifier make_classifier(std::shared_ptr<const GaussianDiscriminant> gd) {
  return [gd = std::move(gd)](const Vector& x) { return gd->classify(x); };
}

std::vector<Vector> adaptive_prefill(const SyntheticWorld& world, const StreamSpec& spec,
                                     std::size_t count) {
  Rng rng = make_rng(world.seed ^ (spec.seed * 0x9E3779B97F4A7C15ULL), "adaptive-prefill");
  std::vector<Vector> out;
  out.reserve(count);
  const auto kp = world.surrogate.size();
  for (std::size_t i = 0; i < count; ++i) {
    const auto c = std::uniform_int_distribution<std::size_t>(0, kp - 1)(rng);
    out.push_back(world.surrogate[c].sample(rng));
  }
  return out;
}

namespace {

struct AdaptiveTrace {
  std::vector<Verdict> verdicts;
  std::vector<bool> holds_bl;
  double prefill_score = 0.0;
};

AdaptiveTrace run_adaptive(const SyntheticWorld& world, Engine& engine, const StreamSpec& spec) {
  if (spec.kind != StreamKind::AdaptiveMix) {
    throw Error(ErrorCode::InvalidArgument, "count_missed needs an adaptive_mix stream");
  }
  const std::size_t n = engine.config().window_size;
  const std::string account = "adaptive-attacker";
  engine.prefill_window(account, adaptive_prefill(world, spec, n));

  AdaptiveTrace trace;
  {
    auto window = engine.windows().find(account);
    std::lock_guard lock(window->mutex());
    trace.prefill_score = engine.scorer().score(engine.config().variant, *window);
  }
  const auto stream = gen_stream(world, spec);
  std::size_t since_bl = std::numeric_limits<std::size_t>::max();
  for (const auto& item : stream) {
    since_bl = item.benign_looking ? 0 : (since_bl == std::numeric_limits<std::size_t>::max()
                                              ? since_bl
                                              : since_bl + 1);
    QueryRequest req{account, {item.feature}, ResponseMode::Hard};
    trace.verdicts.push_back(engine.handle_query(req).verdict);
    trace.holds_bl.push_back(since_bl < n);
  }
  return trace;
}

}  // namespace

PremiseProbe probe_premise(const SyntheticWorld& world, Engine& engine, const StreamSpec& spec) {
  if (!is_window_variant(engine.config().variant)) {
    throw Error(ErrorCode::InvalidArgument, "adaptive counting needs a window detector");
  }
  const double saved = engine.config().threshold;
  engine.set_threshold(std::numeric_limits<double>::infinity());
  const auto trace = run_adaptive(world, engine, spec);
  engine.set_threshold(saved);

  PremiseProbe probe;
  probe.floor = trace.prefill_score;
  probe.ceiling = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trace.verdicts.size(); ++i) {
    const double s = trace.verdicts[i].score;
    if (trace.holds_bl[i]) {
      probe.ceiling = std::max(probe.ceiling, s);
    } else {
      probe.floor = std::min(probe.floor, s);
    }
  }
  if (!(probe.floor > probe.ceiling)) {
    throw Error(ErrorCode::PremiseViolated,
                "pure-malicious floor " + std::to_string(probe.floor) +
                    " does not exceed mixed-window ceiling " + std::to_string(probe.ceiling));
  }
  probe.threshold = std::isfinite(probe.ceiling) ? 0.5 * (probe.floor + probe.ceiling)
                                                 : probe.floor - 1.0;
  return probe;
}

std::size_t count_missed(const SyntheticWorld& world, Engine& engine, const StreamSpec& spec) {
  const auto trace = run_adaptive(world, engine, spec);
  std::size_t missed = 0;
  for (std::size_t i = 0; i < trace.verdicts.size(); ++i) {
    const bool flagged = trace.verdicts[i].is_malicious;
    if (flagged == trace.holds_bl[i]) {
      throw Error(ErrorCode::PremiseViolated,
                  "query " + std::to_string(i) + (flagged ? " flagged although its window holds"
                                                          : " passed although its window lacks") +
                      " a benign-looking sample");
    }
    if (!flagged) ++missed;
  }
  return missed;
}

}  // namespace sentinel
