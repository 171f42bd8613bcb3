#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "sentinel/tensor_stats.hpp"

namespace sentinel {

/// One record of an "ADDQRY01" feature stream.
struct QueryRecord {
  std::string account;
  Vector feature;
  int label = -1;  // ground truth, -1 when unknown
};

struct QueryStream {
  std::size_t dim = 0;
  std::vector<QueryRecord> records;
};

/// Layout: magic "ADDQRY01", u32 d, then records of (u16 account length,
/// account bytes, d f32 features, i32 label). All little-endian.
void write_query_stream(const std::filesystem::path& path, const QueryStream& stream);
QueryStream read_query_stream(const std::filesystem::path& path);

/// Write-temp-then-rename for reports.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace sentinel
