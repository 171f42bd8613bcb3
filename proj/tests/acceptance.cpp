// One PASS/FAIL line per acceptance criterion; exits nonzero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sentinel/account_windows.hpp"
#include "sentinel/calibration.hpp"
#include "sentinel/error.hpp"
#include "sentinel/metrics.hpp"
#include "sentinel/scenarios.hpp"

using namespace sentinel;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "failed: " << what << "; ";
    pass = pass && ok;
  }
};

Moments diag_moments(std::initializer_list<double> mean, std::initializer_list<double> var) {
  Moments m;
  m.mean = Vector::Map(mean.begin(), static_cast<Eigen::Index>(mean.size()));
  m.cov = Vector::Map(var.begin(), static_cast<Eigen::Index>(var.size())).asDiagonal();
  m.count = 10;
  return m;
}

void frechet_oracle(Outcome& o) {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int pairs = 0;
  for (const int d : {1, 2, 8, 16}) {
    for (int t = 0; t < 125; ++t, ++pairs) {
      const Moments r{oracle::random_vec(rng, d), oracle::random_psd(rng, d), 100};
      const Moments q{oracle::random_vec(rng, d, 2.0), oracle::random_psd(rng, d), 100};
      for (const double eps : {0.0, kDefaultEpsilon}) {
        const double want = oracle::frechet(r.mean, r.cov, q.mean, q.cov, eps);
        const double got = frechet_distance(r, q, eps);
        worst = std::max(worst, std::abs(got - want) / std::abs(want));
      }
    }
  }
  o.require(worst <= 1e-8, "relative error vs eigen oracle");
  const auto a = diag_moments({0, 0}, {1, 4});
  const auto b = diag_moments({1, 1}, {4, 1});
  const double c0 = frechet_distance(b, b, 0.0);
  const double c9 = frechet_distance(diag_moments({0}, {1}), diag_moments({3}, {1}), 0.0);
  const double c1 = frechet_distance(diag_moments({0}, {1}), diag_moments({0}, {4}), 0.0);
  const double c4 = frechet_distance(a, b, 0.0);
  o.require(std::abs(c0) <= 1e-12 && std::abs(c9 - 9.0) <= 1e-12 && std::abs(c1 - 1.0) <= 1e-12 &&
                std::abs(c4 - 4.0) <= 1e-12,
            "closed forms");
  o.detail << pairs << " pairs, max rel err " << worst << "; closed forms " << c0 << ", " << c9
           << ", " << c1 << ", " << c4;
}

void table1_analog(Outcome& o) {
  WorldParams p;  // d=8, K=K'=10, separation 6, seed 1
  const Setup s = build_setup(p);
  DetectorConfig cfg;
  cfg.window_size = 8;
  StreamSpec benign;
  benign.kind = StreamKind::BenignId;
  benign.length = 2000;
  benign.seed = 1;
  StreamSpec malicious;
  malicious.kind = StreamKind::Malicious;
  malicious.length = 2000;
  malicious.seed = 1;
  const auto r = run_detection(s, cfg, benign, malicious, 1);
  o.require(r.fpr95 == 0.0 && r.auroc == 1.0 && r.aupr == 1.0, "perfect separation");
  o.detail << "FPR@TPR95=" << r.fpr95 << " AUROC=" << r.auroc << " AUPR=" << r.aupr
           << " gap=" << r.gap;
}

void window_monotonicity(Outcome& o) {
  const std::vector<std::size_t> sizes{4, 8, 16, 32};
  const auto rows = separation_study(WorldParams{}, sizes, 20, 50);
  o.detail << "mean gaps";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    o.detail << ' ' << rows[i].mean_gap;
    if (i > 0) o.require(rows[i].mean_gap >= rows[i - 1].mean_gap, "nondecreasing mean gap");
  }
}

void variant_ordering(Outcome& o) {
  WorldParams p;
  p.surrogate_classes = 2;
  p.separation = 2.0;
  p.surrogate_radius = 3.0;
  LabelSubsetParams lp;  // 2000/2000 queries, subset of 3
  const std::vector<Variant> variants{Variant::ADD, Variant::EW, Variant::GDD};
  const auto rows = variant_study(p, lp, 8, 10, variants);
  const double add = rows[0].mean_auroc, ew = rows[1].mean_auroc, gdd = rows[2].mean_auroc;
  o.require(add - gdd >= 0.02, "ADD - GDD >= 0.02");
  o.require(add - ew >= 0.02, "ADD - EW >= 0.02");
  o.detail << "AUROC add=" << add << " ew=" << ew << " gdd=" << gdd;
}

void adaptive_counts(Outcome& o) {
  WorldParams p;
  p.surrogate_classes = 1;
  p.cov_scale = 0.05;
  const std::vector<std::size_t> hs{10, 100};
  const std::vector<double> xs{5, 10, 20, 50};
  const std::vector<std::size_t> ns{1, 2, 4, 8, 16, 32};
  std::size_t exact = 0, cells = 0;
  bool saw400 = false, saw1000 = false;
  try {
    for (const auto& row : adaptive_grid(p, hs, xs, ns)) {
      ++cells;
      exact += row.missed == row.expected ? 1 : 0;
      if (row.bl_budget == 100 && row.evasion_percent == 10.0) {
        if (row.window_size == 4) saw400 = row.missed == 400;
        if (row.window_size == 16) saw1000 = row.missed == 1000;
      }
    }
  } catch (const Error& e) {
    o.require(false, e.what());
  }
  o.require(cells > 0 && exact == cells, "every cell matches the formula");
  o.require(saw400 && saw1000, "(100,10,4)=400 and (100,10,16)=1000");
  o.detail << exact << "/" << cells << " cells exact";
}

void poisoning_uniformity(Outcome& o) {
  WorldParams p;
  p.train_per_class = 200;
  const Setup s = build_setup(p);
  DetectorConfig cfg;
  cfg.window_size = 8;
  cfg.threshold = -kInf;
  Engine engine(*s.reference, cfg, s.classifier, s.train_features);
  StreamSpec spec;
  spec.kind = StreamKind::BenignId;
  spec.length = 10000;
  spec.seed = 6;
  std::size_t correct = 0;
  for (const auto& it : gen_stream(s.world, spec)) {
    correct += engine.handle_query({"u", {it.feature}, ResponseMode::Hard}).returned_class.front() ==
                       it.truth
                   ? 1
                   : 0;
  }
  const double acc = static_cast<double>(correct) / 10000.0;
  const double sigma = std::sqrt(0.1 * 0.9 / 10000.0);
  o.require(std::abs(acc - 0.1) <= 3.0 * sigma, "accuracy within 3 sigma of 0.1");
  o.detail << "accuracy " << acc << " (0.1 +/- " << 3.0 * sigma << ")";
}

void calibration_soundness(Outcome& o) {
  WorldParams p;
  const Setup s = build_setup(p);
  StreamSpec spec;
  spec.kind = StreamKind::BenignId;
  spec.length = 5000;
  spec.seed = 7;
  const auto items = gen_stream(s.world, spec);
  std::vector<LabeledFeature> stream;
  for (const auto& it : items) stream.push_back({it.feature, it.truth});
  CalibrationSetup setup;
  setup.detector.window_size = 8;
  setup.seed_features = s.train_features;
  const double gamma = 1e-4;
  const auto rep = calibrate_tau(*s.reference, stream, s.classifier, gamma, setup);
  const double acc = simulate_defended_accuracy(*s.reference, stream, s.classifier, rep.tau, setup);
  o.require(acc >= rep.acc_star * (1.0 - gamma), "re-simulated accuracy");

  DetectorConfig open;
  open.window_size = 8;
  Engine engine(*s.reference, open, s.classifier, s.train_features);
  std::size_t identical = 0;
  for (const auto& it : items) {
    const auto resp = engine.handle_query({"u", {it.feature}, ResponseMode::Hard});
    const auto c = s.classifier(it.feature);
    identical += resp.labels.front() == honest_response(c, ResponseMode::Hard) &&
                         resp.returned_class.front() == c.class_id
                     ? 1
                     : 0;
  }
  o.require(identical == items.size(), "tau=+inf matches the classifier");
  o.detail << "tau=" << rep.tau << " acc*=" << rep.acc_star << " re-simulated=" << acc
           << " flagged=" << rep.false_positives << "; +inf identical " << identical << "/"
           << items.size();
}

void performance(Outcome& o) {
  BenchParams bp;  // d=256, N=64, K=10, 10^4 iterations
  const auto r = run_bench(bp);
  o.require(r.stats.p50_micros < 5000.0, "p50 < 5 ms");
  o.require(r.window_bytes == 65536 && r.stats.window_bytes_per_account == 65536, "64 KiB window");
  o.detail << "p50=" << r.stats.p50_micros << "us p99=" << r.stats.p99_micros
           << "us over " << r.stats.queries_scored << " queries, window " << r.window_bytes
           << " bytes";
}

void metric_oracles(Outcome& o) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> len(1, 2000), grid(0, 40);
  std::normal_distribution<double> z(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> b(static_cast<std::size_t>(len(rng))), m(static_cast<std::size_t>(len(rng)));
    for (auto& x : b) x = t % 2 ? grid(rng) : z(rng);
    for (auto& x : m) x = t % 2 ? grid(rng) + 5 : z(rng) + 1.0;
    const auto s = make_scored_stream(b, m);
    worst = std::max(worst, std::abs(fpr_at_tpr(s, 0.95) - oracle::fpr_at_tpr(b, m, 0.95)));
    worst = std::max(worst, std::abs(auroc(s) - oracle::auroc(b, m)));
    worst = std::max(worst, std::abs(aupr(s) - oracle::aupr(b, m)));
  }
  o.require(worst <= 1e-12, "max abs deviation");
  o.detail << "200 streams, max abs deviation " << worst;
}

void moment_window_oracles(Outcome& o) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> dd(1, 32), nn(1, 300);
  std::normal_distribution<double> z(1.0, 3.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int d = dd(rng), n = nn(rng);
    std::vector<oracle::Vec> xs(n, oracle::Vec(d));
    Matrix rows(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) rows(i, j) = xs[i][j] = z(rng);
    const auto got = estimate_moments(rows);
    const auto want = oracle::two_pass(xs);
    double scale = 0.0;
    for (int i = 0; i < d; ++i) scale = std::max(scale, want.cov[i][i]);
    for (int i = 0; i < d; ++i) {
      worst = std::max(worst, std::abs(got.mean[i] - want.mean[i]) / std::max(1.0, std::abs(want.mean[i])));
      for (int j = 0; j < d; ++j) worst = std::max(worst, std::abs(got.cov(i, j) - want.cov[i][j]) / scale);
    }
  }
  o.require(worst <= 1e-10, "moments vs two-pass");

  std::uniform_int_distribution<int> cap(1, 16), dim(1, 4), pushes(1, 40), cls(0, 9);
  std::size_t mismatches = 0;
  const int sequences = 100000;
  for (int seq = 0; seq < sequences; ++seq) {
    const auto n = static_cast<std::size_t>(cap(rng));
    const int d = dim(rng);
    AccountWindow w("s", n, static_cast<std::size_t>(d));
    oracle::ShadowWindow shadow{n, {}};
    const int k = pushes(rng);
    for (int p = 0; p < k; ++p) {
      Vector f(d);
      std::vector<float> ff(d);
      for (int j = 0; j < d; ++j) ff[j] = static_cast<float>(f[j] = z(rng));
      const int c = cls(rng);
      w.push(f, c);
      shadow.push(ff, c);
    }
    bool same = w.size() == shadow.items.size();
    for (std::size_t i = 0; same && i < w.size(); ++i) {
      same = w.class_id(i) == shadow.items[i].second;
      for (int j = 0; same && j < d; ++j) {
        same = w.feature(i)[j] == static_cast<double>(shadow.items[i].first[j]);
      }
    }
    mismatches += same ? 0 : 1;
  }
  o.require(mismatches == 0, "window vs shadow deque");
  o.detail << "moments max rel err " << worst << "; " << sequences << " push sequences, "
           << mismatches << " mismatches";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"frechet oracle equivalence", frechet_oracle},
      {"perfect separation at N=8", table1_analog},
      {"window-size monotonicity", window_monotonicity},
      {"variant ordering on label subsets", variant_ordering},
      {"adaptive missed counts", adaptive_counts},
      {"poisoning uniformity", poisoning_uniformity},
      {"calibration soundness", calibration_soundness},
      {"performance budget", performance},
      {"metric oracles", metric_oracles},
      {"moment and window oracles", moment_window_oracles},
  };
  // Runtime budgets in seconds where one applies.
  const std::vector<double> budget{10, 60, 0, 0, 0, 0, 0, 0, 0, 0};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget[i] > 0) o.require(secs < budget[i], "runtime budget");
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
