#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sentinel/gateway.hpp"
#include "sentinel/reference_model.hpp"
#include "sentinel/simulator.hpp"

namespace sentinel {

struct WorldParams {
  std::size_t dim = 8;
  std::size_t classes = 10;
  std::size_t surrogate_classes = 10;
  double separation = 6.0;
  std::uint64_t seed = 1;
  std::size_t train_per_class = 500;
  double cov_scale = 1.0;
  double surrogate_radius = 0.0;
};

/// A world, its training set, the reference fitted on it and the world's
/// discriminant acting as the target model.
struct Setup {
  SyntheticWorld world;
  std::vector<Vector> train_features;
  std::vector<int> train_labels;
  std::shared_ptr<const ReferenceModel> reference;
  std::shared_ptr<const GaussianDiscriminant> discriminant;
  Classifier classifier;
};

Setup build_setup(const WorldParams& params);

struct AccountRun {
  std::vector<double> scores;
  std::vector<int> predicted;
  std::vector<int> returned;
  std::vector<bool> poisoned;
};

/// Sends the stream one query per request from a single account.
AccountRun run_account(Engine& engine, const std::string& account,
                       const std::vector<StreamItem>& stream,
                       ResponseMode mode = ResponseMode::Hard);

struct DetectionResult {
  std::vector<double> benign_scores;
  std::vector<double> malicious_scores;
  double fpr95 = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
  double gap = 0.0;
};

/// One benign and one malicious account, each with a seeded window, scored
/// per query by a fresh engine.
DetectionResult run_detection(const Setup& setup, const DetectorConfig& config,
                              const StreamSpec& benign, const StreamSpec& malicious,
                              std::uint64_t engine_seed);

struct SeparationRow {
  std::size_t window_size = 0;
  double mean_gap = 0.0;
  std::vector<double> gaps;  // one per trial
};

/// Gap between the lowest malicious and highest benign ADD score over
/// independent batches of N fresh queries, averaged over trials whose world
/// seeds are base.seed, base.seed + 1, ...
std::vector<SeparationRow> separation_study(const WorldParams& base,
                                            std::span<const std::size_t> window_sizes,
                                            std::size_t trials, std::size_t batches_per_side,
                                            double epsilon = kDefaultEpsilon);

struct VariantRow {
  Variant variant = Variant::ADD;
  double mean_auroc = 0.0;
  std::vector<double> aurocs;
};

/// Benign users that only ever query a few classes, optionally with a
/// feature shift of `shift_scale` average standard deviations.
struct LabelSubsetParams {
  std::size_t benign_queries = 2000;
  std::size_t malicious_queries = 2000;
  std::size_t subset_size = 3;
  double shift_scale = 0.0;
};

/// Class subset (drawn from the world seed) and shift for one world.
StreamSpec label_subset_benign_spec(const SyntheticWorld& world, const LabelSubsetParams& params);

/// AUROC of each variant on per-query account streams of the label-subset
/// scenario, averaged over trials.
std::vector<VariantRow> variant_study(const WorldParams& base, const LabelSubsetParams& scenario,
                                      std::size_t window_size, std::size_t trials,
                                      std::span<const Variant> variants,
                                      double epsilon = kDefaultEpsilon);

struct AdaptiveRow {
  std::size_t bl_budget = 0;
  double evasion_percent = 0.0;
  std::size_t window_size = 0;
  std::size_t expected = 0;
  std::size_t missed = 0;
  double threshold = 0.0;
};

/// Mixing-attack missed counts over a (H, x, N) grid. Each cell gets a fresh
/// ADD engine whose threshold comes from probe_premise.
std::vector<AdaptiveRow> adaptive_grid(const WorldParams& params,
                                       std::span<const std::size_t> bl_budgets,
                                       std::span<const double> evasion_percents,
                                       std::span<const std::size_t> window_sizes,
                                       std::uint64_t stream_seed = 1,
                                       double epsilon = kDefaultEpsilon);

struct BenchParams {
  std::size_t dim = 256;
  std::size_t window_size = 64;
  std::size_t classes = 10;
  std::size_t iterations = 10000;
  std::size_t train_per_class = 600;
  std::uint64_t seed = 1;
};

struct BenchResult {
  EngineStats stats;
  std::size_t window_bytes = 0;
};

/// Single-query scoring latency of an ADD engine on one seeded account.
BenchResult run_bench(const BenchParams& params);

}  // namespace sentinel
