#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <random>

#include "oracles.hpp"
#include "sentinel/error.hpp"
#include "sentinel/scenarios.hpp"

using namespace sentinel;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

WorldParams adaptive_params() {
  WorldParams p;
  p.surrogate_classes = 1;
  p.cov_scale = 0.05;
  return p;
}

// Queries whose window of the last n stream items holds a benign-looking one.
std::size_t layout_missed(const std::vector<StreamItem>& stream, std::size_t n) {
  std::size_t missed = 0;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    bool any = false;
    for (std::size_t j = i + 1 > n ? i + 1 - n : 0; j <= i; ++j) any = any || stream[j].benign_looking;
    missed += any ? 1 : 0;
  }
  return missed;
}

}  // namespace

TEST_CASE("worlds are deterministic") {
  const auto a = make_world(8, 10, 3, 6.0, 7);
  const auto b = make_world(8, 10, 3, 6.0, 7);
  REQUIRE(a.training.size() == 10);
  REQUIRE(a.surrogate.size() == 3);
  for (std::size_t c = 0; c < 10; ++c) {
    CHECK(a.training[c].mean == b.training[c].mean);
    CHECK(a.training[c].cov == b.training[c].cov);
  }
  CHECK(a.surrogate[2].mean == b.surrogate[2].mean);
  const auto c = make_world(8, 10, 3, 6.0, 8);
  CHECK(c.training[0].mean != a.training[0].mean);

  // Pairwise separation holds for every training/training and training/surrogate pair.
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = i + 1; j < 10; ++j) {
      CHECK((a.training[i].mean - a.training[j].mean).norm() >= 6.0 * a.avg_std);
    }
    for (const auto& s : a.surrogate) CHECK((a.training[i].mean - s.mean).norm() >= 6.0 * a.avg_std);
  }
}

TEST_CASE("world contract") {
  CHECK(code_of([] { make_world(8, 10, 1, 0.0, 1); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { make_world(0, 10, 1, 6.0, 1); }) == ErrorCode::InvalidArgument);
  WorldOptions o;
  o.cov_scale = 1.5;
  CHECK(code_of([&] { make_world(8, 10, 1, 6.0, 1, o); }) == ErrorCode::InvalidArgument);
  o = {};
  o.surrogate_radius = 2.0;
  CHECK(code_of([&] { make_world(8, 10, 1, 6.0, 1, o); }) == ErrorCode::InvalidArgument);
  o = {};
  o.max_restarts = 1;
  o.tries_per_mean = 1;
  CHECK(code_of([&] { make_world(1, 10, 10, 6.0, 1, o); }) == ErrorCode::SeparationInfeasible);
}

TEST_CASE("adaptive stream layout") {
  const auto w = make_world(4, 10, 1, 6.0, 3);
  StreamSpec spec;
  spec.kind = StreamKind::AdaptiveMix;
  spec.bl_budget = 100;
  spec.evasion_percent = 10.0;
  CHECK(adaptive_period_ml(10.0) == 9);
  CHECK(adaptive_period_ml(50.0) == 1);
  CHECK(adaptive_period_ml(100.0) == 0);
  CHECK(adaptive_period_ml(30.0) == 3);
  CHECK(adaptive_period_ml(7.0) == 14);
  const auto s = gen_stream(w, spec);
  REQUIRE(s.size() == 1000);
  std::size_t bl = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].benign_looking == (i % 10 == 0));
    CHECK(s[i].is_malicious);
    bl += s[i].benign_looking ? 1 : 0;
  }
  CHECK(bl == 100);
  CHECK(code_of([] { adaptive_period_ml(0.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("benign streams") {
  const auto w = make_world(4, 10, 2, 6.0, 3);
  StreamSpec spec;
  spec.kind = StreamKind::BenignShift;
  spec.length = 200;
  spec.class_subset = {3};
  for (const auto& it : gen_stream(w, spec)) {
    CHECK(it.truth == 3);
    CHECK_FALSE(it.is_malicious);
  }
  spec.class_subset = {12};
  CHECK(code_of([&] { gen_stream(w, spec); }) == ErrorCode::InvalidSubset);
  spec.class_subset = {};
  CHECK(code_of([&] { gen_stream(w, spec); }) == ErrorCode::InvalidSubset);

  StreamSpec id;
  id.kind = StreamKind::BenignId;
  id.length = 100000;
  std::vector<double> counts(10, 0.0);
  for (const auto& it : gen_stream(w, id)) counts[static_cast<std::size_t>(it.truth)] += 1.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - 1e4) * (c - 1e4) / 1e4;
  const boost::math::chi_squared dist(9.0);
  CHECK(chi2 < boost::math::quantile(boost::math::complement(dist, 0.001)));

  StreamSpec mal;
  mal.kind = StreamKind::Malicious;
  mal.length = 50;
  for (const auto& it : gen_stream(w, mal)) {
    CHECK(it.truth == -1);
    CHECK(it.is_malicious);
  }
  CHECK(parse_stream_kind("adaptive_mix") == StreamKind::AdaptiveMix);
}

TEST_CASE("discriminant") {
  const auto w = make_world(6, 10, 1, 6.0, 11);
  for (std::size_t k = 0; k < 10; ++k) {
    CHECK(classify_gd(w, w.training[k].mean).class_id == static_cast<int>(k));
  }

  const GaussianDiscriminant twin({Vector::Constant(2, 1.0), Vector::Constant(2, -1.0)},
                                  {Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  CHECK(twin.classify(Vector::Zero(2)).class_id == 0);
  const GaussianDiscriminant flipped({Vector::Constant(2, -1.0), Vector::Constant(2, 1.0)},
                                     {Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  CHECK(flipped.classify(Vector::Zero(2)).class_id == 0);

  const GaussianDiscriminant gd(w);
  Rng rng = make_rng(2, "gd-oracle");
  std::normal_distribution<double> z(0.0, 4.0);
  for (int t = 0; t < 10000; ++t) {
    const auto& g = w.training[static_cast<std::size_t>(t % 10)];
    Vector x = g.mean;
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] += z(rng);
    int best = 0;
    double top = -INFINITY;
    for (std::size_t k = 0; k < 10; ++k) {
      const double ld = oracle::log_density(x, w.training[k].mean, w.training[k].cov);
      if (ld > top) {
        top = ld;
        best = static_cast<int>(k);
      }
    }
    const auto c = gd.classify(x);
    CHECK(c.class_id == best);
    CHECK(c.logits.size() == 10);
    CHECK(std::abs(c.logits[static_cast<std::size_t>(best)] - top) <= 1e-8 * std::abs(top));
  }
  CHECK(code_of([&] { gd.classify(Vector::Zero(3)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("missed-count formula") {
  CHECK(expected_missed(100, 10.0, 4) == 400);
  CHECK(expected_missed(100, 10.0, 16) == 1000);
  CHECK(expected_missed(1, 37.0, 1) == 1);
  CHECK(expected_missed(100, 10.0, 9) == 900);
  CHECK(expected_missed(100, 10.0, 10) == 1000);
  // More window, more budget or a lower evasion percentage never helps the defender.
  for (const double x : {5.0, 10.0, 20.0, 33.0, 50.0, 100.0}) {
    for (std::size_t h : {1u, 10u, 100u}) {
      for (std::size_t n = 1; n < 40; ++n) {
        CHECK(expected_missed(h, x, n + 1) >= expected_missed(h, x, n));
        CHECK(expected_missed(h + 1, x, n) >= expected_missed(h, x, n));
        CHECK(expected_missed(h, x / 2, n) >= expected_missed(h, x, n));
      }
    }
  }
}

TEST_CASE("simulated missed counts") {
  const Setup s = build_setup(adaptive_params());
  StreamSpec spec;
  spec.kind = StreamKind::AdaptiveMix;
  spec.bl_budget = 100;
  spec.evasion_percent = 10.0;
  spec.seed = 1;
  const auto stream = gen_stream(s.world, spec);
  for (const std::size_t n : {4u, 16u}) {
    DetectorConfig cfg;
    cfg.window_size = n;
    EngineOptions opts;
    opts.seed = 1;
    Engine engine(*s.reference, cfg, s.classifier, s.train_features, opts);
    const auto probe = probe_premise(s.world, engine, spec);
    CHECK(probe.floor > probe.ceiling);
    engine.set_threshold(probe.threshold);
    const auto missed = count_missed(s.world, engine, spec);
    CHECK(missed == (n == 4 ? 400u : 1000u));
    CHECK(missed == layout_missed(stream, n));
  }

  StreamSpec one = spec;
  one.bl_budget = 1;
  one.evasion_percent = 25.0;
  DetectorConfig cfg;
  cfg.window_size = 1;
  Engine engine(*s.reference, cfg, s.classifier, s.train_features);
  engine.set_threshold(probe_premise(s.world, engine, one).threshold);
  CHECK(count_missed(s.world, engine, one) == 1);

  // A threshold that flags everything contradicts the premise.
  engine.set_threshold(-INFINITY);
  CHECK(code_of([&] { count_missed(s.world, engine, one); }) == ErrorCode::PremiseViolated);
}

TEST_CASE("adaptive grid") {
  const std::vector<std::size_t> hs{10};
  const std::vector<double> xs{20.0, 50.0};
  const std::vector<std::size_t> ns{1, 3, 8};
  const auto rows = adaptive_grid(adaptive_params(), hs, xs, ns);
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) {
    CHECK(r.missed == r.expected);
    CHECK(r.expected == expected_missed(r.bl_budget, r.evasion_percent, r.window_size));
  }
}
