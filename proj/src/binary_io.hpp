#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sentinel/error.hpp"

namespace sentinel::detail {

static_assert(sizeof(double) == 8 && sizeof(float) == 4);

// Little-endian byte sink/source for the on-disk formats.
class ByteWriter {
 public:
  void raw(std::string_view bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

  template <typename T>
  void put(T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(std::begin(bytes), std::end(bytes));
    }
    buf_.insert(buf_.end(), std::begin(bytes), std::end(bytes));
  }

  const std::vector<char>& bytes() const { return buf_; }
  std::vector<char>& bytes() { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(const char* data, std::size_t size) : data_(data), size_(size) {}

  template <typename T>
  T get() {
    if (remaining() < sizeof(T)) {
      throw Error(ErrorCode::IoFailure, "unexpected end of data");
    }
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, data_ + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(std::begin(bytes), std::end(bytes));
    }
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }

  std::string get_string(std::size_t len) {
    if (remaining() < len) {
      throw Error(ErrorCode::IoFailure, "unexpected end of data");
    }
    std::string out(data_ + pos_, len);
    pos_ += len;
    return out;
  }

  std::size_t remaining() const { return size_ - pos_; }
  std::size_t position() const { return pos_; }

 private:
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path);

/// Write-temp-then-rename.
void write_file_atomic(const std::filesystem::path& path, const std::vector<char>& bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

std::uint32_t crc32_of(const char* data, std::size_t size);

}  // namespace sentinel::detail
