#pragma once

#include <cstddef>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentinel/rng.hpp"
#include "sentinel/tensor_stats.hpp"

namespace sentinel {

/// One query feature together with the class the target model predicted for it.
struct WindowItem {
  Vector feature;
  int class_id = 0;
};

/// Fixed-capacity FIFO of the latest (feature, predicted class) pairs of one
/// account. Features are held at 32-bit precision.
class AccountWindow {
 public:
  AccountWindow(std::string account_id, std::size_t capacity, std::size_t dim);

  const std::string& account_id() const { return account_id_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return size_; }
  bool full() const { return size_ == capacity_; }

  /// Number of cold-start entries that have not been evicted yet.
  std::size_t seeded_count() const { return seeded_; }

  /// Appends one entry, evicting the oldest when full.
  void push(const Vector& feature, int class_id);

  /// Cold-start fill; counted by seeded_count().
  void seed(std::span<const WindowItem> items);

  /// `i` counts from the oldest entry.
  Vector feature(std::size_t i) const;
  int class_id(std::size_t i) const;

  /// All entries as rows, oldest first, promoted to double.
  Matrix features() const;
  std::vector<int> class_ids() const;

  /// Bytes of feature storage: capacity * dim * sizeof(float).
  std::size_t feature_bytes() const { return storage_.size() * sizeof(float); }

  /// Serializes access to this account's window.
  std::mutex& mutex() const { return mu_; }

 private:
  std::size_t slot(std::size_t i) const { return (head_ + i) % capacity_; }

  std::string account_id_;
  std::size_t capacity_;
  std::size_t dim_;
  std::vector<float> storage_;
  std::vector<int> labels_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  std::size_t seeded_ = 0;
  mutable std::mutex mu_;
};

/// Appends `items` in order. All dimensions are checked before any is pushed.
AccountWindow& push_queries(AccountWindow& window, std::span<const WindowItem> items);

/// Window features grouped by predicted class, arrival order kept within a group.
std::map<int, Matrix> partition_by_class(const AccountWindow& window);

/// Fraction of unordered entry pairs with cosine similarity above `sim_threshold`.
double near_duplicate_rate(const AccountWindow& window, double sim_threshold);

/// Per-account windows with cold-start seeding from a pool of training
/// features. Bounded by `max_accounts` (0 = unbounded) with least-recently
/// active eviction of whole windows.
class WindowStore {
 public:
  WindowStore(std::size_t capacity, std::size_t dim, std::vector<WindowItem> seed_pool,
              std::uint64_t seed, std::size_t max_accounts = 0);

  /// New windows are filled with `capacity` pool entries drawn without
  /// replacement.
  std::shared_ptr<AccountWindow> get_or_create(const std::string& account_id);

  /// Creates (or replaces) a window pre-filled with `prefill` instead of seeds.
  std::shared_ptr<AccountWindow> create_with(const std::string& account_id,
                                             std::span<const WindowItem> prefill);

  std::shared_ptr<AccountWindow> find(const std::string& account_id) const;

  std::size_t size() const;
  std::size_t evictions() const;
  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }
  std::size_t max_accounts() const { return max_accounts_; }
  std::size_t seed_pool_size() const { return seed_pool_.size(); }

 private:
  struct Entry {
    std::shared_ptr<AccountWindow> window;
    std::list<std::string>::iterator lru;
  };

  std::shared_ptr<AccountWindow> insert_locked(const std::string& account_id,
                                               std::shared_ptr<AccountWindow> window);

  std::size_t capacity_;
  std::size_t dim_;
  std::vector<WindowItem> seed_pool_;
  std::size_t max_accounts_;
  Rng rng_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, Entry> windows_;
  std::list<std::string> lru_;  // front = most recently active
  std::size_t evictions_ = 0;
};

}  // namespace sentinel
