#include "sentinel/stream_io.hpp"

#include <cstdint>
#include <limits>
#include <string_view>

#include "binary_io.hpp"
#include "sentinel/error.hpp"

namespace sentinel {
namespace {

constexpr std::string_view kMagic = "ADDQRY01";

}  // namespace

void write_query_stream(const std::filesystem::path& path, const QueryStream& stream) {
  if (stream.dim == 0) {
    throw Error(ErrorCode::InvalidArgument, "stream dimension must be positive");
  }
  detail::ByteWriter w;
  w.raw(kMagic);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(stream.dim));
  for (const auto& rec : stream.records) {
    if (static_cast<std::size_t>(rec.feature.size()) != stream.dim) {
      throw Error(ErrorCode::DimensionMismatch, "record feature dimension " +
                                                    std::to_string(rec.feature.size()));
    }
    if (rec.account.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorCode::InvalidArgument, "account id longer than 65535 bytes");
    }
    w.put<std::uint16_t>(static_cast<std::uint16_t>(rec.account.size()));
    w.raw(rec.account);
    for (Eigen::Index j = 0; j < rec.feature.size(); ++j) {
      w.put<float>(static_cast<float>(rec.feature[j]));
    }
    w.put<std::int32_t>(rec.label);
  }
  detail::write_file_atomic(path, w.bytes());
}

QueryStream read_query_stream(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() < kMagic.size() || std::string_view(bytes.data(), kMagic.size()) != kMagic) {
    throw Error(ErrorCode::FormatVersionMismatch, path.string() + " is not an ADDQRY01 file");
  }
  detail::ByteReader r(bytes.data() + kMagic.size(), bytes.size() - kMagic.size());
  QueryStream out;
  out.dim = r.get<std::uint32_t>();
  if (out.dim == 0) {
    throw Error(ErrorCode::IoFailure, path.string() + " declares dimension 0");
  }
  const auto d = static_cast<Eigen::Index>(out.dim);
  while (r.remaining() > 0) {
    QueryRecord rec;
    const auto len = r.get<std::uint16_t>();
    rec.account = r.get_string(len);
    rec.feature.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) rec.feature[j] = r.get<float>();
    rec.label = r.get<std::int32_t>();
    out.records.push_back(std::move(rec));
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  detail::write_text_atomic(path, text);
}

}  // namespace sentinel
