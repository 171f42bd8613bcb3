#include "sentinel/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "sentinel/error.hpp"

namespace sentinel {
namespace {

std::vector<WindowItem> label_with(const Classifier& classify, const std::vector<Vector>& features) {
  std::vector<WindowItem> items;
  items.reserve(features.size());
  for (const auto& f : features) items.push_back({f, classify(f).class_id});
  return items;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

}  // namespace

ResponseMode parse_response_mode(std::string_view text) {
  if (text == "hard") return ResponseMode::Hard;
  if (text == "soft") return ResponseMode::Soft;
  throw Error(ErrorCode::InvalidArgument, "unknown response mode '" + std::string(text) + "'");
}

std::string_view response_mode_name(ResponseMode mode) {
  return mode == ResponseMode::Hard ? "hard" : "soft";
}

std::vector<double> honest_response(const Classification& c, ResponseMode mode) {
  if (mode == ResponseMode::Soft) return softmax(c.logits);
  std::vector<double> out(c.logits.size(), 0.0);
  out.at(static_cast<std::size_t>(c.class_id)) = 1.0;
  return out;
}

Engine::Engine(ReferenceModel reference, DetectorConfig config, Classifier classifier,
               const std::vector<Vector>& seed_features, EngineOptions options)
    : reference_(std::move(reference)),
      config_(config),
      classifier_(std::move(classifier)),
      options_(options),
      scorer_(reference_, config.epsilon),
      store_(config.window_size, reference_.dim(), label_with(classifier_, seed_features),
             options.seed, options.max_accounts),
      poison_rng_(make_rng(options.seed, "poisoning")) {
  if (config_.window_size == 0) {
    throw Error(ErrorCode::InvalidArgument, "window size must be positive");
  }
  if (!(config_.epsilon >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "epsilon must be nonnegative");
  }
  latencies_.reserve(std::max<std::size_t>(options_.latency_history, 1));
}

Classification Engine::classify(const Vector& feature) const {
  Classification c = classifier_(feature);
  if (c.logits.size() != reference_.num_classes()) {
    throw Error(ErrorCode::DimensionMismatch, "classifier returned " +
                                                  std::to_string(c.logits.size()) +
                                                  " logits for " +
                                                  std::to_string(reference_.num_classes()) +
                                                  " classes");
  }
  if (c.class_id < 0 || static_cast<std::size_t>(c.class_id) >= reference_.num_classes()) {
    throw Error(ErrorCode::UnknownClassId,
                "classifier predicted class " + std::to_string(c.class_id));
  }
  return c;
}

double Engine::score_window(const AccountWindow& window, const Classification& c) const {
  switch (config_.variant) {
    case Variant::MSP: {
      const auto probs = softmax(c.logits);
      return score_msp(probs);
    }
    case Variant::Energy: return score_energy(c.logits, config_.energy_temperature);
    default: return scorer_.score(config_.variant, window);
  }
}

QueryResponse Engine::handle_query(const QueryRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  if (request.features.empty()) {
    throw Error(ErrorCode::InvalidArgument, "request carries no features");
  }
  for (const auto& f : request.features) {
    if (static_cast<std::size_t>(f.size()) != reference_.dim()) {
      throw Error(ErrorCode::DimensionMismatch, "query feature of dimension " +
                                                    std::to_string(f.size()) + ", engine uses " +
                                                    std::to_string(reference_.dim()));
    }
  }
  auto window = store_.get_or_create(request.account_id);
  std::lock_guard lock(window->mutex());

  const auto k = reference_.num_classes();
  QueryResponse out;
  for (const auto& feature : request.features) {
    const Classification c = classify(feature);
    const auto t0 = std::chrono::steady_clock::now();
    window->push(feature, c.class_id);
    Verdict verdict = apply_threshold(score_window(*window, c), config_);
    const auto t1 = std::chrono::steady_clock::now();
    record_latency(std::chrono::duration<double, std::micro>(t1 - t0).count());
    verdict.window_len = window->size();

    if (verdict.is_malicious) {
      int fake;
      {
        std::lock_guard plock(poison_mu_);
        fake = std::uniform_int_distribution<int>(0, static_cast<int>(k) - 1)(poison_rng_);
      }
      std::vector<double> label(k, 0.0);
      if (request.response_mode == ResponseMode::Soft && options_.uniform_soft_poison) {
        std::fill(label.begin(), label.end(), 1.0 / static_cast<double>(k));
      } else {
        label[static_cast<std::size_t>(fake)] = 1.0;
      }
      out.labels.push_back(std::move(label));
      out.returned_class.push_back(fake);
      out.poisoned.push_back(true);
    } else {
      out.labels.push_back(honest_response(c, request.response_mode));
      out.returned_class.push_back(c.class_id);
      out.poisoned.push_back(false);
    }
    out.predicted_class.push_back(c.class_id);
    out.verdicts.push_back(verdict);
  }
  out.verdict = out.verdicts.back();
  out.latency_micros = std::chrono::duration_cast<std::chrono::microseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  return out;
}

void Engine::prefill_window(const std::string& account_id, const std::vector<Vector>& features) {
  std::vector<WindowItem> items;
  items.reserve(features.size());
  for (const auto& f : features) {
    if (static_cast<std::size_t>(f.size()) != reference_.dim()) {
      throw Error(ErrorCode::DimensionMismatch, "prefill feature has wrong dimension");
    }
    items.push_back({f, classify(f).class_id});
  }
  store_.create_with(account_id, items);
}

void Engine::set_threshold(double tau) { config_.threshold = tau; }

void Engine::record_latency(double micros) {
  std::lock_guard lock(latency_mu_);
  ++scored_;
  const auto cap = std::max<std::size_t>(options_.latency_history, 1);
  if (latencies_.size() < cap) {
    latencies_.push_back(micros);
  } else {
    latencies_[latency_next_] = micros;
    latency_next_ = (latency_next_ + 1) % cap;
  }
}

EngineStats Engine::stats() const {
  EngineStats s;
  s.accounts = store_.size();
  s.window_bytes_per_account = window_feature_bytes(config_.window_size, reference_.dim());
  s.total_window_bytes = s.accounts * s.window_bytes_per_account;
  s.evictions = store_.evictions();
  std::vector<double> snapshot;
  {
    std::lock_guard lock(latency_mu_);
    snapshot = latencies_;
    s.queries_scored = scored_;
  }
  s.p50_micros = percentile(snapshot, 0.50);
  s.p95_micros = percentile(snapshot, 0.95);
  s.p99_micros = percentile(snapshot, 0.99);
  return s;
}

}  // namespace sentinel
