#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "sentinel/tensor_stats.hpp"

namespace sentinel {

/// Frozen per-class reference distributions fitted on training features.
/// Class ids are the indices 0..K-1 of `classes()`.
class ReferenceModel {
 public:
  ReferenceModel(std::size_t dim, std::vector<Moments> classes);

  std::size_t dim() const { return dim_; }
  std::size_t num_classes() const { return classes_.size(); }
  const Moments& stats(int class_id) const;
  const std::vector<Moments>& classes() const { return classes_; }

  /// Moments of all training samples pooled across classes.
  const Moments& global() const { return global_; }

  bool operator==(const ReferenceModel& other) const;

 private:
  std::size_t dim_;
  std::vector<Moments> classes_;
  Moments global_;
};

/// Rows of `features` are training samples; `labels` are ground-truth ids in
/// [0, num_classes). Every class needs at least two samples.
ReferenceModel fit_reference(const Matrix& features, std::span<const int> labels,
                             int num_classes);

/// Binary "ADDREF01" persistence (little-endian, CRC32 trailer). Writes go to a
/// temporary file that is renamed into place.
void save_reference(const ReferenceModel& model, const std::filesystem::path& path);
ReferenceModel load_reference(const std::filesystem::path& path);

}  // namespace sentinel
