#include "sentinel/scenarios.hpp"

#include <algorithm>
#include <numeric>

#include "sentinel/error.hpp"
#include "sentinel/metrics.hpp"

namespace sentinel {

Setup build_setup(const WorldParams& params) {
  WorldOptions opts;
  opts.cov_scale = params.cov_scale;
  opts.surrogate_radius = params.surrogate_radius;
  Setup s;
  s.world = make_world(params.dim, params.classes, params.surrogate_classes, params.separation,
                       params.seed, opts);
  Rng rng = make_rng(params.seed, "training-set");
  const auto d = static_cast<Eigen::Index>(params.dim);
  Matrix rows(static_cast<Eigen::Index>(params.classes * params.train_per_class), d);
  Eigen::Index r = 0;
  for (std::size_t c = 0; c < params.classes; ++c) {
    for (std::size_t i = 0; i < params.train_per_class; ++i) {
      Vector x = s.world.training[c].sample(rng);
      rows.row(r++) = x.transpose();
      s.train_features.push_back(std::move(x));
      s.train_labels.push_back(static_cast<int>(c));
    }
  }
  s.reference = std::make_shared<const ReferenceModel>(
      fit_reference(rows, s.train_labels, static_cast<int>(params.classes)));
  s.discriminant = std::make_shared<const GaussianDiscriminant>(s.world);
  s.classifier = make_classifier(s.discriminant);
  return s;
}

AccountRun run_account(Engine& engine, const std::string& account,
                       const std::vector<StreamItem>& stream, ResponseMode mode) {
  AccountRun run;
  run.scores.reserve(stream.size());
  for (const auto& item : stream) {
    const auto resp = engine.handle_query({account, {item.feature}, mode});
    run.scores.push_back(resp.verdict.score);
    run.predicted.push_back(resp.predicted_class.front());
    run.returned.push_back(resp.returned_class.front());
    run.poisoned.push_back(resp.poisoned.front());
  }
  return run;
}

DetectionResult run_detection(const Setup& setup, const DetectorConfig& config,
                              const StreamSpec& benign, const StreamSpec& malicious,
                              std::uint64_t engine_seed) {
  EngineOptions opts;
  opts.seed = engine_seed;
  Engine engine(*setup.reference, config, setup.classifier, setup.train_features, opts);
  DetectionResult out;
  out.benign_scores = run_account(engine, "benign-0", gen_stream(setup.world, benign)).scores;
  out.malicious_scores =
      run_account(engine, "malicious-0", gen_stream(setup.world, malicious)).scores;
  const auto scored = make_scored_stream(out.benign_scores, out.malicious_scores);
  out.fpr95 = fpr_at_tpr(scored, 0.95);
  out.auroc = auroc(scored);
  out.aupr = aupr(scored);
  out.gap = separation_gap(out.benign_scores, out.malicious_scores);
  return out;
}

namespace {

std::vector<double> batch_scores(const Setup& setup, const WindowScorer& scorer, StreamKind kind,
                                 std::size_t window_size, std::size_t batches,
                                 std::uint64_t stream_seed) {
  StreamSpec spec;
  spec.kind = kind;
  spec.length = window_size * batches;
  spec.seed = stream_seed;
  const auto stream = gen_stream(setup.world, spec);
  std::vector<double> out;
  out.reserve(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    AccountWindow window("batch", window_size, setup.world.dim);
    for (std::size_t i = 0; i < window_size; ++i) {
      const auto& x = stream[b * window_size + i].feature;
      window.push(x, setup.classifier(x).class_id);
    }
    out.push_back(scorer.score_add(window));
  }
  return out;
}

}  // namespace

std::vector<SeparationRow> separation_study(const WorldParams& base,
                                            std::span<const std::size_t> window_sizes,
                                            std::size_t trials, std::size_t batches_per_side,
                                            double epsilon) {
  if (trials == 0 || batches_per_side == 0 || window_sizes.empty()) {
    throw Error(ErrorCode::InvalidArgument, "separation study needs trials, batches and sizes");
  }
  std::vector<SeparationRow> rows(window_sizes.size());
  for (std::size_t i = 0; i < window_sizes.size(); ++i) rows[i].window_size = window_sizes[i];
  for (std::size_t t = 0; t < trials; ++t) {
    WorldParams params = base;
    params.seed = base.seed + t;
    const Setup setup = build_setup(params);
    const WindowScorer scorer(*setup.reference, epsilon);
    for (auto& row : rows) {
      const auto benign = batch_scores(setup, scorer, StreamKind::BenignId, row.window_size,
                                       batches_per_side, 1000 + row.window_size);
      const auto malicious = batch_scores(setup, scorer, StreamKind::Malicious, row.window_size,
                                          batches_per_side, 2000 + row.window_size);
      row.gaps.push_back(separation_gap(benign, malicious));
    }
  }
  for (auto& row : rows) {
    row.mean_gap = std::accumulate(row.gaps.begin(), row.gaps.end(), 0.0) /
                   static_cast<double>(row.gaps.size());
  }
  return rows;
}

StreamSpec label_subset_benign_spec(const SyntheticWorld& world, const LabelSubsetParams& params) {
  if (params.subset_size == 0 || params.subset_size > world.num_classes()) {
    throw Error(ErrorCode::InvalidSubset, "subset size must lie in [1, K]");
  }
  Rng rng = make_rng(world.seed, "label-subset");
  std::vector<int> classes(world.num_classes());
  std::iota(classes.begin(), classes.end(), 0);
  std::shuffle(classes.begin(), classes.end(), rng);
  classes.resize(params.subset_size);
  std::sort(classes.begin(), classes.end());

  StreamSpec spec;
  spec.kind = StreamKind::BenignShift;
  spec.length = params.benign_queries;
  spec.class_subset = std::move(classes);
  if (params.shift_scale > 0.0) {
    std::normal_distribution<double> z(0.0, 1.0);
    Vector dir(static_cast<Eigen::Index>(world.dim));
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = z(rng);
    spec.shift = params.shift_scale * world.avg_std * dir.normalized();
  }
  return spec;
}

std::vector<VariantRow> variant_study(const WorldParams& base, const LabelSubsetParams& scenario,
                                      std::size_t window_size, std::size_t trials,
                                      std::span<const Variant> variants, double epsilon) {
  if (trials == 0 || variants.empty()) {
    throw Error(ErrorCode::InvalidArgument, "variant study needs trials and variants");
  }
  std::vector<VariantRow> rows(variants.size());
  for (std::size_t i = 0; i < variants.size(); ++i) rows[i].variant = variants[i];
  for (std::size_t t = 0; t < trials; ++t) {
    WorldParams params = base;
    params.seed = base.seed + t;
    const Setup setup = build_setup(params);
    const StreamSpec benign = label_subset_benign_spec(setup.world, scenario);
    StreamSpec malicious;
    malicious.kind = StreamKind::Malicious;
    malicious.length = scenario.malicious_queries;
    malicious.seed = 1;
    for (auto& row : rows) {
      DetectorConfig cfg;
      cfg.variant = row.variant;
      cfg.window_size = window_size;
      cfg.epsilon = epsilon;
      row.aurocs.push_back(run_detection(setup, cfg, benign, malicious, params.seed).auroc);
    }
  }
  for (auto& row : rows) {
    row.mean_auroc = std::accumulate(row.aurocs.begin(), row.aurocs.end(), 0.0) /
                     static_cast<double>(row.aurocs.size());
  }
  return rows;
}

std::vector<AdaptiveRow> adaptive_grid(const WorldParams& params,
                                       std::span<const std::size_t> bl_budgets,
                                       std::span<const double> evasion_percents,
                                       std::span<const std::size_t> window_sizes,
                                       std::uint64_t stream_seed, double epsilon) {
  const Setup setup = build_setup(params);
  std::vector<AdaptiveRow> rows;
  for (const auto h : bl_budgets) {
    for (const auto x : evasion_percents) {
      for (const auto n : window_sizes) {
        DetectorConfig cfg;
        cfg.window_size = n;
        cfg.epsilon = epsilon;
        EngineOptions opts;
        opts.seed = params.seed;
        Engine engine(*setup.reference, cfg, setup.classifier, setup.train_features, opts);
        StreamSpec spec;
        spec.kind = StreamKind::AdaptiveMix;
        spec.bl_budget = h;
        spec.evasion_percent = x;
        spec.seed = stream_seed;
        AdaptiveRow row;
        row.bl_budget = h;
        row.evasion_percent = x;
        row.window_size = n;
        row.expected = expected_missed(h, x, n);
        row.threshold = probe_premise(setup.world, engine, spec).threshold;
        engine.set_threshold(row.threshold);
        row.missed = count_missed(setup.world, engine, spec);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

BenchResult run_bench(const BenchParams& params) {
  WorldParams wp;
  wp.dim = params.dim;
  wp.classes = params.classes;
  wp.surrogate_classes = 1;
  wp.seed = params.seed;
  wp.train_per_class = params.train_per_class;
  const Setup setup = build_setup(wp);
  DetectorConfig cfg;
  cfg.window_size = params.window_size;
  EngineOptions opts;
  opts.seed = params.seed;
  opts.latency_history = std::max<std::size_t>(params.iterations, 1);
  Engine engine(*setup.reference, cfg, setup.classifier, setup.train_features, opts);
  StreamSpec spec;
  spec.kind = StreamKind::BenignId;
  spec.length = params.iterations;
  spec.seed = 1;
  run_account(engine, "bench", gen_stream(setup.world, spec));
  BenchResult out;
  out.stats = engine.stats();
  out.window_bytes = engine.windows().find("bench")->feature_bytes();
  return out;
}

}  // namespace sentinel
