#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sentinel/calibration.hpp"
#include "sentinel/config.hpp"
#include "sentinel/error.hpp"
#include "sentinel/metrics.hpp"
#include "sentinel/reference_model.hpp"
#include "sentinel/scenarios.hpp"
#include "sentinel/stream_io.hpp"

namespace fs = std::filesystem;
using namespace sentinel;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

// Reads keys with defaults and writes every resolved value back, so the
// config doubles as a complete run manifest.
class Resolver {
 public:
  explicit Resolver(KeyValueConfig cfg) : cfg_(std::move(cfg)) {}

  std::string str(const std::string& key, const std::string& fallback) {
    auto v = cfg_.get_string(key, fallback);
    cfg_.set(key, v);
    return v;
  }
  double num(const std::string& key, double fallback) {
    const double v = cfg_.get_double(key, fallback);
    cfg_.set(key, format_double(v));
    return v;
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    const auto v = cfg_.get_uint(key, fallback);
    cfg_.set(key, std::to_string(v));
    return static_cast<std::size_t>(v);
  }
  std::vector<std::size_t> counts(const std::string& key, const std::vector<std::int64_t>& fallback) {
    const auto raw = cfg_.get_int_list(key, fallback);
    std::vector<std::size_t> out;
    std::string text;
    for (const auto v : raw) {
      if (v < 0) throw Error(ErrorCode::InvalidArgument, key + " entries must be >= 0");
      out.push_back(static_cast<std::size_t>(v));
      text += (text.empty() ? "" : ",") + std::to_string(v);
    }
    cfg_.set(key, text);
    return out;
  }
  std::vector<double> nums(const std::string& key, const std::vector<double>& fallback) {
    const auto out = cfg_.get_double_list(key, fallback);
    std::string text;
    for (const auto v : out) text += (text.empty() ? "" : ",") + format_double(v);
    cfg_.set(key, text);
    return out;
  }
  const KeyValueConfig& config() const { return cfg_; }

 private:
  KeyValueConfig cfg_;
};

WorldParams world_params(Resolver& r, std::uint64_t seed) {
  WorldParams p;
  p.seed = seed;
  p.dim = r.count("dim", p.dim);
  p.classes = r.count("classes", p.classes);
  p.surrogate_classes = r.count("surrogate_classes", p.surrogate_classes);
  p.separation = r.num("separation", p.separation);
  p.train_per_class = r.count("train_per_class", p.train_per_class);
  p.cov_scale = r.num("cov_scale", p.cov_scale);
  p.surrogate_radius = r.num("surrogate_radius", p.surrogate_radius);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  write_text_file(path, text);
}

std::string csv_double(double v) { return format_double(v); }

QueryStream to_query_stream(const std::vector<StreamItem>& items, const std::string& account,
                            std::size_t dim) {
  QueryStream qs;
  qs.dim = dim;
  for (const auto& it : items) qs.records.push_back({account, it.feature, it.truth});
  return qs;
}

QueryStream training_stream(const Setup& setup) {
  QueryStream qs;
  qs.dim = setup.world.dim;
  for (std::size_t i = 0; i < setup.train_features.size(); ++i) {
    qs.records.push_back({"train", setup.train_features[i], setup.train_labels[i]});
  }
  return qs;
}

std::string verdict_csv(const std::string& account, const AccountRun& run) {
  std::ostringstream out;
  out << "account,index,score,flagged,predicted,returned\n";
  for (std::size_t i = 0; i < run.scores.size(); ++i) {
    out << account << ',' << i << ',' << csv_double(run.scores[i]) << ','
        << (run.poisoned[i] ? 1 : 0) << ',' << run.predicted[i] << ',' << run.returned[i] << '\n';
  }
  return out.str();
}

void simulate_detection(Resolver& r, std::uint64_t seed, const fs::path& out) {
  const auto params = world_params(r, seed);
  auto cfg = DetectorConfig{};
  cfg.variant = parse_variant(r.str("variant", "add"));
  cfg.window_size = r.count("N", 8);
  cfg.threshold = r.num("tau", std::numeric_limits<double>::infinity());
  cfg.epsilon = r.num("epsilon", kDefaultEpsilon);
  cfg.energy_temperature = r.num("temperature", 1.0);

  StreamSpec benign;
  benign.kind = parse_stream_kind(r.str("benign_kind", "benign_id"));
  benign.length = r.count("benign_queries", 2000);
  benign.seed = r.count("benign_stream_seed", 1);
  const double shift_scale = r.num("shift_scale", 0.0);
  StreamSpec malicious;
  malicious.kind = StreamKind::Malicious;
  malicious.length = r.count("malicious_queries", 2000);
  malicious.seed = r.count("malicious_stream_seed", 1);

  const Setup setup = build_setup(params);
  if (benign.kind == StreamKind::BenignShift) {
    LabelSubsetParams lp;
    lp.benign_queries = benign.length;
    lp.subset_size = r.count("subset_size", setup.world.num_classes());
    lp.shift_scale = shift_scale;
    const auto s = benign.seed;
    benign = label_subset_benign_spec(setup.world, lp);
    benign.seed = s;
  } else if (benign.kind != StreamKind::BenignId) {
    throw Error(ErrorCode::InvalidArgument, "benign_kind must be benign_id or benign_shift");
  }

  const auto benign_items = gen_stream(setup.world, benign);
  const auto malicious_items = gen_stream(setup.world, malicious);
  EngineOptions opts;
  opts.seed = seed;
  Engine engine(*setup.reference, cfg, setup.classifier, setup.train_features, opts);
  const auto b = run_account(engine, "benign-0", benign_items);
  const auto m = run_account(engine, "malicious-0", malicious_items);

  const auto scored = make_scored_stream(b.scores, m.scores);
  std::ostringstream metrics;
  metrics << "variant=" << variant_name(cfg.variant) << '\n'
          << "N=" << cfg.window_size << '\n'
          << "benign_queries=" << b.scores.size() << '\n'
          << "malicious_queries=" << m.scores.size() << '\n'
          << "fpr_at_tpr95=" << format_double(fpr_at_tpr(scored, 0.95)) << '\n'
          << "auroc=" << format_double(auroc(scored)) << '\n'
          << "aupr=" << format_double(aupr(scored)) << '\n'
          << "separation_gap=" << format_double(separation_gap(b.scores, m.scores)) << '\n';

  write_query_stream(out / "train.addq", training_stream(setup));
  write_query_stream(out / "benign.addq", to_query_stream(benign_items, "benign-0", params.dim));
  write_query_stream(out / "malicious.addq",
                     to_query_stream(malicious_items, "malicious-0", params.dim));
  const auto vb = verdict_csv("benign-0", b);
  const auto vm = verdict_csv("malicious-0", m);
  write_text(out / "verdicts.csv", vb + vm.substr(vm.find('\n') + 1));
  write_text(out / "metrics.txt", metrics.str());
  write_text(out / "curve.csv", curve_csv(roc_pr_points(scored)));
  std::cout << metrics.str();
}

void simulate_separation(Resolver& r, std::uint64_t seed, const fs::path& out) {
  const auto params = world_params(r, seed);
  const auto sizes = r.counts("window_sizes", {4, 8, 16, 32});
  const auto trials = r.count("trials", 20);
  const auto batches = r.count("batches", 50);
  const double eps = r.num("epsilon", kDefaultEpsilon);
  const auto rows = separation_study(params, sizes, trials, batches, eps);
  std::ostringstream csv;
  csv << "N,mean_gap\n";
  for (const auto& row : rows) csv << row.window_size << ',' << format_double(row.mean_gap) << '\n';
  write_text(out / "separation.csv", csv.str());
  std::cout << csv.str();
}

void simulate_label_subset(Resolver& r, std::uint64_t seed, const fs::path& out) {
  const auto params = world_params(r, seed);
  LabelSubsetParams lp;
  lp.benign_queries = r.count("benign_queries", lp.benign_queries);
  lp.malicious_queries = r.count("malicious_queries", lp.malicious_queries);
  lp.subset_size = r.count("subset_size", lp.subset_size);
  lp.shift_scale = r.num("shift_scale", lp.shift_scale);
  const auto n = r.count("N", 8);
  const auto trials = r.count("trials", 10);
  const double eps = r.num("epsilon", kDefaultEpsilon);
  std::vector<Variant> variants;
  std::istringstream names(r.str("variants", "add,ew,gdd"));
  for (std::string v; std::getline(names, v, ',');) variants.push_back(parse_variant(v));
  const auto rows = variant_study(params, lp, n, trials, variants, eps);
  std::ostringstream csv;
  csv << "variant,mean_auroc\n";
  for (const auto& row : rows) {
    csv << variant_name(row.variant) << ',' << format_double(row.mean_auroc) << '\n';
  }
  write_text(out / "variants.csv", csv.str());
  std::cout << csv.str();
}

void simulate_adaptive(Resolver& r, std::uint64_t seed, const fs::path& out) {
  const auto params = world_params(r, seed);
  const auto budgets = r.counts("bl_budgets", {10, 100});
  const auto percents = r.nums("evasion_percents", {5, 10, 20, 50});
  const auto sizes = r.counts("window_sizes", {1, 2, 4, 8, 16, 32});
  const auto stream_seed = r.count("stream_seed", 1);
  const double eps = r.num("epsilon", kDefaultEpsilon);
  const auto rows = adaptive_grid(params, budgets, percents, sizes, stream_seed, eps);
  std::ostringstream csv;
  csv << "H,x,N,expected,missed,tau\n";
  for (const auto& row : rows) {
    csv << row.bl_budget << ',' << format_double(row.evasion_percent) << ',' << row.window_size
        << ',' << row.expected << ',' << row.missed << ',' << format_double(row.threshold) << '\n';
  }
  write_text(out / "adaptive.csv", csv.str());
  std::cout << csv.str();
}

ReferenceModel load_model(const std::string& path) { return load_reference(path); }

std::shared_ptr<const GaussianDiscriminant> discriminant_from(const ReferenceModel& ref) {
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  for (const auto& st : ref.classes()) {
    means.push_back(st.mean);
    covs.push_back(st.cov);
  }
  return std::make_shared<const GaussianDiscriminant>(means, covs, 1e-6);
}

// Training features when given, otherwise draws from the reference classes.
std::vector<Vector> seed_pool(const ReferenceModel& ref, const std::string& train_path,
                              std::size_t window_size, std::uint64_t seed) {
  std::vector<Vector> pool;
  if (!train_path.empty()) {
    const auto qs = read_query_stream(train_path);
    if (qs.dim != ref.dim()) {
      throw Error(ErrorCode::DimensionMismatch, "training stream dimension differs from model");
    }
    for (const auto& rec : qs.records) pool.push_back(rec.feature);
    return pool;
  }
  Rng rng = make_rng(seed, "seed-pool");
  const std::size_t per_class = std::max<std::size_t>(window_size, 16);
  const auto d = static_cast<Eigen::Index>(ref.dim());
  for (const auto& st : ref.classes()) {
    Gaussian g{st.mean, st.cov, Eigen::LLT<Matrix>(st.cov + 1e-9 * Matrix::Identity(d, d)).matrixL()};
    for (std::size_t i = 0; i < per_class; ++i) pool.push_back(g.sample(rng));
  }
  return pool;
}

struct DetectorFlags {
  std::string variant = "add";
  std::size_t window_size = 64;
  double tau = std::numeric_limits<double>::infinity();
  std::string tau_text;
  double epsilon = kDefaultEpsilon;

  DetectorConfig config() const {
    DetectorConfig c;
    c.variant = parse_variant(variant);
    c.window_size = window_size;
    c.threshold = tau_text.empty() ? tau : parse_double(tau_text);
    c.epsilon = epsilon;
    return c;
  }
};

void add_detector_flags(CLI::App* cmd, DetectorFlags& f, bool with_tau) {
  cmd->add_option("--variant", f.variant, "add|ew|gdd|msp|energy")
      ->check(CLI::IsMember({"add", "ew", "gdd", "msp", "energy"}));
  cmd->add_option("--window-size", f.window_size, "window size N")->check(CLI::PositiveNumber);
  cmd->add_option("--epsilon", f.epsilon, "covariance regularizer");
  if (with_tau) cmd->add_option("--tau", f.tau_text, "threshold (inf disables poisoning)");
}

int run_fit(const std::string& in, const std::string& out_model, int classes) {
  const auto qs = read_query_stream(in);
  if (qs.records.empty()) throw Error(ErrorCode::EmptySampleSet, "input stream has no records");
  Matrix rows(static_cast<Eigen::Index>(qs.records.size()), static_cast<Eigen::Index>(qs.dim));
  std::vector<int> labels;
  int max_label = -1;
  for (std::size_t i = 0; i < qs.records.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) = qs.records[i].feature.transpose();
    labels.push_back(qs.records[i].label);
    max_label = std::max(max_label, qs.records[i].label);
  }
  const int k = classes > 0 ? classes : max_label + 1;
  const auto ref = fit_reference(rows, labels, k);
  save_reference(ref, out_model);
  std::cout << "d=" << ref.dim() << "\nK=" << ref.num_classes() << '\n';
  for (std::size_t id = 0; id < ref.num_classes(); ++id) {
    std::cout << "class " << id << " count=" << ref.classes()[id].count << '\n';
  }
  return kExitOk;
}

int run_calibrate(const std::string& model, const std::string& calib, const std::string& train,
                  const DetectorFlags& flags, double gamma, std::uint64_t seed,
                  const std::string& out) {
  const auto ref = load_model(model);
  const auto qs = read_query_stream(calib);
  std::vector<LabeledFeature> stream;
  for (const auto& rec : qs.records) {
    if (rec.label < 0) {
      throw Error(ErrorCode::LabelOutOfRange, "calibration stream needs ground-truth labels");
    }
    stream.push_back({rec.feature, rec.label});
  }
  CalibrationSetup setup;
  setup.detector = flags.config();
  setup.engine.seed = seed;
  setup.seed_features = seed_pool(ref, train, setup.detector.window_size, seed);
  const auto report =
      calibrate_tau(ref, stream, make_classifier(discriminant_from(ref)), gamma, setup);
  const auto text = format_report(report);
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(fs::path(out) / "calibration.txt", text);
    write_text(fs::path(out) / "sweep.csv", format_sweep_csv(report));
  }
  std::cout << text;
  return kExitOk;
}

int run_score(const std::string& model, const std::string& in, const std::string& train,
              const DetectorFlags& flags, const std::string& mode, std::uint64_t seed,
              const std::string& out) {
  const auto ref = load_model(model);
  const auto qs = read_query_stream(in);
  if (qs.records.empty()) throw Error(ErrorCode::EmptyStream, "input stream has no records");
  const auto cfg = flags.config();
  EngineOptions opts;
  opts.seed = seed;
  Engine engine(ref, cfg, make_classifier(discriminant_from(ref)),
                seed_pool(ref, train, cfg.window_size, seed), opts);
  const auto rm = parse_response_mode(mode);
  std::ostringstream csv;
  csv << "index,account,score,flagged,predicted,returned\n";
  std::size_t flagged = 0, labelled = 0, correct = 0;
  for (std::size_t i = 0; i < qs.records.size(); ++i) {
    const auto& rec = qs.records[i];
    const auto resp = engine.handle_query({rec.account, {rec.feature}, rm});
    flagged += resp.poisoned.front() ? 1 : 0;
    if (rec.label >= 0) {
      ++labelled;
      correct += resp.returned_class.front() == rec.label ? 1 : 0;
    }
    csv << i << ',' << rec.account << ',' << format_double(resp.verdict.score) << ','
        << (resp.poisoned.front() ? 1 : 0) << ',' << resp.predicted_class.front() << ','
        << resp.returned_class.front() << '\n';
  }
  std::ostringstream summary;
  summary << "queries=" << qs.records.size() << "\nflagged=" << flagged << '\n';
  if (labelled > 0) {
    summary << "returned_accuracy="
            << format_double(static_cast<double>(correct) / static_cast<double>(labelled)) << '\n';
  }
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(fs::path(out) / "verdicts.csv", csv.str());
    write_text(fs::path(out) / "summary.txt", summary.str());
  }
  std::cout << summary.str();
  return kExitOk;
}

int run_simulate(const std::string& config_path, std::optional<std::uint64_t> seed_flag,
                 const std::string& out) {
  Resolver r(KeyValueConfig::load(config_path));
  const auto scenario = r.str("scenario", "detection");
  std::uint64_t seed = r.count("seed", 1);
  if (seed_flag) seed = *seed_flag;
  KeyValueConfig base = r.config();
  base.set("seed", std::to_string(seed));
  Resolver rr(base);
  const fs::path dir(out);
  fs::create_directories(dir);
  if (scenario == "detection") {
    simulate_detection(rr, seed, dir);
  } else if (scenario == "separation-study") {
    simulate_separation(rr, seed, dir);
  } else if (scenario == "label-subset") {
    simulate_label_subset(rr, seed, dir);
  } else if (scenario == "adaptive") {
    simulate_adaptive(rr, seed, dir);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown scenario '" + scenario + "'");
  }
  write_text(dir / "manifest.txt", rr.config().to_text());
  return kExitOk;
}

int run_bench_cmd(const std::string& config_path, std::optional<std::size_t> n_flag,
                  std::optional<std::uint64_t> seed_flag, const std::string& out) {
  KeyValueConfig cfg;
  if (!config_path.empty()) cfg = KeyValueConfig::load(config_path);
  Resolver r(cfg);
  BenchParams p;
  p.dim = r.count("dim", p.dim);
  p.window_size = r.count("N", p.window_size);
  p.classes = r.count("classes", p.classes);
  p.iterations = r.count("iterations", p.iterations);
  p.train_per_class = r.count("train_per_class", p.train_per_class);
  p.seed = r.count("seed", p.seed);
  if (n_flag) p.window_size = *n_flag;
  if (seed_flag) p.seed = *seed_flag;
  const auto res = run_bench(p);
  std::ostringstream rep;
  rep << "dim=" << p.dim << "\nN=" << p.window_size << "\nclasses=" << p.classes
      << "\niterations=" << p.iterations << "\np50_us=" << format_double(res.stats.p50_micros)
      << "\np95_us=" << format_double(res.stats.p95_micros)
      << "\np99_us=" << format_double(res.stats.p99_micros)
      << "\nwindow_bytes_per_account=" << res.window_bytes << '\n';
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(fs::path(out) / "bench.txt", rep.str());
  }
  std::cout << rep.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-account model-stealing detection and prediction poisoning"};
  app.require_subcommand(1);

  std::string in, out, model, train, calib, config_path, mode = "hard";
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> seed_opt;
  std::optional<std::size_t> n_opt;
  int classes = 0;
  double gamma = 1e-4;
  DetectorFlags calib_flags, score_flags;

  auto* fit = app.add_subcommand("fit", "fit per-class reference statistics");
  fit->add_option("--in", in, "labelled ADDQRY01 stream")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", out, "output ADDREF01 model")->required();
  fit->add_option("--classes", classes, "number of classes (default: max label + 1)");

  auto* cal = app.add_subcommand("calibrate", "pick the threshold from a dropping ratio");
  cal->add_option("--model", model)->required()->check(CLI::ExistingFile);
  cal->add_option("--calib", calib, "labelled benign ADDQRY01 stream")
      ->required()
      ->check(CLI::ExistingFile);
  cal->add_option("--train", train, "training stream for window seeding")->check(CLI::ExistingFile);
  cal->add_option("--gamma", gamma, "tolerated relative accuracy drop")->check(CLI::Range(0.0, 1.0));
  cal->add_option("--seed", seed);
  cal->add_option("--out", out, "report directory");
  add_detector_flags(cal, calib_flags, false);

  auto* score = app.add_subcommand("score", "run a query stream through the defended gateway");
  score->add_option("--model", model)->required()->check(CLI::ExistingFile);
  score->add_option("--in", in, "ADDQRY01 query stream")->required()->check(CLI::ExistingFile);
  score->add_option("--train", train, "training stream for window seeding")
      ->check(CLI::ExistingFile);
  score->add_option("--response-mode", mode)->check(CLI::IsMember({"hard", "soft"}));
  score->add_option("--seed", seed);
  score->add_option("--out", out, "output directory");
  add_detector_flags(score, score_flags, true);

  auto* sim = app.add_subcommand("simulate", "run a scenario on a synthetic world");
  sim->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  sim->add_option("--seed", seed_opt, "overrides the config seed");
  sim->add_option("--out", out, "output directory")->required();

  auto* bench = app.add_subcommand("bench", "single-query scoring latency");
  bench->add_option("--config", config_path)->check(CLI::ExistingFile);
  bench->add_option("--window-size", n_opt)->check(CLI::PositiveNumber);
  bench->add_option("--seed", seed_opt);
  bench->add_option("--out", out, "report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*fit) return run_fit(in, out, classes);
    if (*cal) return run_calibrate(model, calib, train, calib_flags, gamma, seed, out);
    if (*score) return run_score(model, in, train, score_flags, mode, seed, out);
    if (*sim) return run_simulate(config_path, seed_opt, out);
    if (*bench) return run_bench_cmd(config_path, n_opt, seed_opt, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_numeric(e.code()) ? kExitNumeric : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
