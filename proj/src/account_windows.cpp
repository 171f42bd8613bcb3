#include "sentinel/account_windows.hpp"

#include <algorithm>
#include <numeric>

#include "sentinel/error.hpp"

namespace sentinel {

AccountWindow::AccountWindow(std::string account_id, std::size_t capacity, std::size_t dim)
    : account_id_(std::move(account_id)),
      capacity_(capacity),
      dim_(dim),
      storage_(capacity * dim, 0.0f),
      labels_(capacity, 0) {
  if (capacity == 0 || dim == 0) {
    throw Error(ErrorCode::InvalidArgument, "window capacity and dimension must be positive");
  }
}

void AccountWindow::push(const Vector& feature, int class_id) {
  if (static_cast<std::size_t>(feature.size()) != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "feature of dimension " +
                                                  std::to_string(feature.size()) +
                                                  " pushed into window of dimension " +
                                                  std::to_string(dim_));
  }
  std::size_t target;
  if (size_ < capacity_) {
    target = slot(size_);
    ++size_;
  } else {
    target = head_;
    head_ = (head_ + 1) % capacity_;
    if (seeded_ > 0) --seeded_;
  }
  float* dst = storage_.data() + target * dim_;
  for (std::size_t j = 0; j < dim_; ++j) dst[j] = static_cast<float>(feature[static_cast<Eigen::Index>(j)]);
  labels_[target] = class_id;
}

void AccountWindow::seed(std::span<const WindowItem> items) {
  push_queries(*this, items);
  seeded_ = std::min(size_, seeded_ + items.size());
}

Vector AccountWindow::feature(std::size_t i) const {
  const float* src = storage_.data() + slot(i) * dim_;
  Vector out(static_cast<Eigen::Index>(dim_));
  for (std::size_t j = 0; j < dim_; ++j) out[static_cast<Eigen::Index>(j)] = src[j];
  return out;
}

int AccountWindow::class_id(std::size_t i) const { return labels_[slot(i)]; }

Matrix AccountWindow::features() const {
  Matrix out(static_cast<Eigen::Index>(size_), static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < size_; ++i) {
    const float* src = storage_.data() + slot(i) * dim_;
    for (std::size_t j = 0; j < dim_; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = src[j];
    }
  }
  return out;
}

std::vector<int> AccountWindow::class_ids() const {
  std::vector<int> out(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = class_id(i);
  return out;
}

AccountWindow& push_queries(AccountWindow& window, std::span<const WindowItem> items) {
  for (const auto& item : items) {
    if (static_cast<std::size_t>(item.feature.size()) != window.dim()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "feature of dimension " + std::to_string(item.feature.size()) +
                      " for window of dimension " + std::to_string(window.dim()));
    }
  }
  for (const auto& item : items) window.push(item.feature, item.class_id);
  return window;
}

std::map<int, Matrix> partition_by_class(const AccountWindow& window) {
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < window.size(); ++i) members[window.class_id(i)].push_back(i);
  const Matrix all = window.features();
  std::map<int, Matrix> groups;
  for (const auto& [class_id, rows] : members) {
    Matrix group(static_cast<Eigen::Index>(rows.size()), all.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      group.row(static_cast<Eigen::Index>(r)) = all.row(static_cast<Eigen::Index>(rows[r]));
    }
    groups.emplace(class_id, std::move(group));
  }
  return groups;
}

double near_duplicate_rate(const AccountWindow& window, double sim_threshold) {
  if (window.size() < 2) {
    throw Error(ErrorCode::WindowTooSmall, "need at least two entries");
  }
  if (!(sim_threshold > 0.0 && sim_threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "similarity threshold must lie in (0, 1]");
  }
  const Matrix rows = window.features();
  const Vector norms = rows.rowwise().norm();
  const auto n = rows.rows();
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double sim;
      if (norms[i] == 0.0 || norms[j] == 0.0) {
        // Two zero vectors are duplicates of each other; one alone is not.
        sim = (norms[i] == 0.0 && norms[j] == 0.0) ? 1.0 : 0.0;
      } else {
        sim = rows.row(i).dot(rows.row(j)) / (norms[i] * norms[j]);
      }
      if (sim > sim_threshold || (sim_threshold == 1.0 && sim >= 1.0 - 1e-12)) ++hits;
    }
  }
  const auto pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return static_cast<double>(hits) / pairs;
}

WindowStore::WindowStore(std::size_t capacity, std::size_t dim, std::vector<WindowItem> seed_pool,
                         std::uint64_t seed, std::size_t max_accounts)
    : capacity_(capacity),
      dim_(dim),
      seed_pool_(std::move(seed_pool)),
      max_accounts_(max_accounts),
      rng_(make_rng(seed, "window-seeding")) {
  if (capacity == 0 || dim == 0) {
    throw Error(ErrorCode::InvalidArgument, "window capacity and dimension must be positive");
  }
  for (const auto& item : seed_pool_) {
    if (static_cast<std::size_t>(item.feature.size()) != dim_) {
      throw Error(ErrorCode::DimensionMismatch, "seed pool entry has wrong dimension");
    }
  }
}

std::shared_ptr<AccountWindow> WindowStore::get_or_create(const std::string& account_id) {
  std::lock_guard lock(mu_);
  if (auto it = windows_.find(account_id); it != windows_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second.lru);
    return it->second.window;
  }
  if (seed_pool_.size() < capacity_) {
    throw Error(ErrorCode::SeedPoolTooSmall, "seed pool holds " +
                                                 std::to_string(seed_pool_.size()) +
                                                 " entries, window needs " +
                                                 std::to_string(capacity_));
  }
  std::vector<std::size_t> all(seed_pool_.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> picked;
  picked.reserve(capacity_);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), capacity_, rng_);
  std::vector<WindowItem> seeds;
  seeds.reserve(capacity_);
  for (auto idx : picked) seeds.push_back(seed_pool_[idx]);
  auto window = std::make_shared<AccountWindow>(account_id, capacity_, dim_);
  window->seed(seeds);
  return insert_locked(account_id, std::move(window));
}

std::shared_ptr<AccountWindow> WindowStore::create_with(const std::string& account_id,
                                                        std::span<const WindowItem> prefill) {
  auto window = std::make_shared<AccountWindow>(account_id, capacity_, dim_);
  push_queries(*window, prefill);
  std::lock_guard lock(mu_);
  if (auto it = windows_.find(account_id); it != windows_.end()) {
    lru_.erase(it->second.lru);
    windows_.erase(it);
  }
  return insert_locked(account_id, std::move(window));
}

std::shared_ptr<AccountWindow> WindowStore::insert_locked(const std::string& account_id,
                                                          std::shared_ptr<AccountWindow> window) {
  if (max_accounts_ > 0 && windows_.size() >= max_accounts_) {
    windows_.erase(lru_.back());
    lru_.pop_back();
    ++evictions_;
  }
  lru_.push_front(account_id);
  windows_.emplace(account_id, Entry{window, lru_.begin()});
  return window;
}

std::shared_ptr<AccountWindow> WindowStore::find(const std::string& account_id) const {
  std::lock_guard lock(mu_);
  auto it = windows_.find(account_id);
  return it == windows_.end() ? nullptr : it->second.window;
}

std::size_t WindowStore::size() const {
  std::lock_guard lock(mu_);
  return windows_.size();
}

std::size_t WindowStore::evictions() const {
  std::lock_guard lock(mu_);
  return evictions_;
}

}  // namespace sentinel
