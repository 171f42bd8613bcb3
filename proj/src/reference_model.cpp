#include "sentinel/reference_model.hpp"

#include <fstream>
#include <iterator>
#include <string>

#include <zlib.h>

#include "binary_io.hpp"
#include "sentinel/error.hpp"

namespace sentinel {
namespace detail {

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  }
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw Error(ErrorCode::IoFailure, "read error on " + path.string());
  }
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<char>& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::IoFailure, "cannot open " + tmp.string() + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw Error(ErrorCode::IoFailure, "write error on " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorCode::IoFailure, "cannot rename into " + path.string() + ": " + ec.message());
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::vector<char>(text.begin(), text.end()));
}

std::uint32_t crc32_of(const char* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(size));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace detail

namespace {

constexpr std::string_view kMagic = "ADDREF01";

}  // namespace

ReferenceModel::ReferenceModel(std::size_t dim, std::vector<Moments> classes)
    : dim_(dim), classes_(std::move(classes)) {
  if (dim_ == 0) {
    throw Error(ErrorCode::InvalidArgument, "reference dimension must be positive");
  }
  if (classes_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "reference needs at least one class");
  }
  const auto d = static_cast<Eigen::Index>(dim_);
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    const auto& m = classes_[c];
    if (m.mean.size() != d || m.cov.rows() != d || m.cov.cols() != d) {
      throw Error(ErrorCode::DimensionMismatch, "class " + std::to_string(c) +
                                                    " does not have dimension " +
                                                    std::to_string(dim_));
    }
    if (m.count < 2) {
      throw Error(ErrorCode::ClassTooSmall, "class " + std::to_string(c) + " has " +
                                                std::to_string(m.count) + " samples");
    }
  }
  global_ = pool_moments(classes_);
}

const Moments& ReferenceModel::stats(int class_id) const {
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= classes_.size()) {
    throw Error(ErrorCode::UnknownClassId, "class " + std::to_string(class_id) +
                                               " not in reference of " +
                                               std::to_string(classes_.size()) + " classes");
  }
  return classes_[static_cast<std::size_t>(class_id)];
}

bool ReferenceModel::operator==(const ReferenceModel& other) const {
  if (dim_ != other.dim_ || classes_.size() != other.classes_.size()) return false;
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    const auto& a = classes_[c];
    const auto& b = other.classes_[c];
    if (a.count != b.count || a.mean != b.mean || a.cov != b.cov) return false;
  }
  return true;
}

ReferenceModel fit_reference(const Matrix& features, std::span<const int> labels,
                             int num_classes) {
  if (num_classes <= 0) {
    throw Error(ErrorCode::InvalidArgument, "num_classes must be positive");
  }
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(features.rows()) + " features but " +
                    std::to_string(labels.size()) + " labels");
  }
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    if (label < 0 || label >= num_classes) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label) + " at row " +
                                                  std::to_string(i) + " outside [0, " +
                                                  std::to_string(num_classes) + ")");
    }
    members[static_cast<std::size_t>(label)].push_back(static_cast<Eigen::Index>(i));
  }
  std::vector<Moments> classes;
  classes.reserve(members.size());
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (members[c].size() < 2) {
      throw Error(ErrorCode::ClassTooSmall, "class " + std::to_string(c) + " has " +
                                                std::to_string(members[c].size()) +
                                                " samples, need at least 2");
    }
    classes.push_back(estimate_moments(Matrix(features(members[c], Eigen::all))));
  }
  return ReferenceModel(static_cast<std::size_t>(features.cols()), std::move(classes));
}

void save_reference(const ReferenceModel& model, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.raw(kMagic);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.dim()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.num_classes()));
  const auto d = static_cast<Eigen::Index>(model.dim());
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    const auto& m = model.classes()[c];
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c));
    w.put<std::uint64_t>(static_cast<std::uint64_t>(m.count));
    for (Eigen::Index i = 0; i < d; ++i) w.put<double>(m.mean[i]);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) w.put<double>(m.cov(i, j));
    }
  }
  const auto& bytes = w.bytes();
  const auto crc = detail::crc32_of(bytes.data() + kMagic.size(), bytes.size() - kMagic.size());
  w.put<std::uint32_t>(crc);
  detail::write_file_atomic(path, w.bytes());
}

ReferenceModel load_reference(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() < kMagic.size() ||
      std::string_view(bytes.data(), kMagic.size()) != kMagic) {
    throw Error(ErrorCode::FormatVersionMismatch, path.string() + " is not an ADDREF01 file");
  }
  if (bytes.size() < kMagic.size() + 12) {
    throw Error(ErrorCode::IoFailure, path.string() + " is truncated");
  }
  const std::size_t payload = bytes.size() - kMagic.size() - 4;
  detail::ByteReader trailer(bytes.data() + bytes.size() - 4, 4);
  const auto stored = trailer.get<std::uint32_t>();
  if (detail::crc32_of(bytes.data() + kMagic.size(), payload) != stored) {
    throw Error(ErrorCode::ChecksumMismatch, path.string() + " failed its CRC32 check");
  }
  detail::ByteReader r(bytes.data() + kMagic.size(), payload);
  const auto dim = r.get<std::uint32_t>();
  const auto k = r.get<std::uint32_t>();
  if (dim == 0 || k == 0) {
    throw Error(ErrorCode::IoFailure, path.string() + " declares an empty model");
  }
  std::vector<Moments> classes(k);
  std::vector<bool> seen(k, false);
  const auto d = static_cast<Eigen::Index>(dim);
  for (std::uint32_t n = 0; n < k; ++n) {
    const auto class_id = r.get<std::uint32_t>();
    if (class_id >= k || seen[class_id]) {
      throw Error(ErrorCode::IoFailure, "bad or duplicate class id " + std::to_string(class_id));
    }
    seen[class_id] = true;
    Moments m;
    m.count = static_cast<std::size_t>(r.get<std::uint64_t>());
    m.mean.resize(d);
    m.cov.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) m.mean[i] = r.get<double>();
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) m.cov(i, j) = r.get<double>();
    }
    classes[class_id] = std::move(m);
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::IoFailure, path.string() + " has trailing bytes");
  }
  return ReferenceModel(dim, std::move(classes));
}

}  // namespace sentinel
