/// @file binary_io.hpp
/// @brief Little-endian byte buffers shared by every on-disk format.

#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "adanns/error.hpp"

namespace adanns {

namespace detail {

template <typename T>
T byteswap_if_big(T value) {
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
      std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

}  // namespace detail

class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    value = detail::byteswap_if_big(value);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put_array(std::span<const T> values) {
    if constexpr (std::endian::native == std::endian::little) {
      const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
      buf_.insert(buf_.end(), p, p + values.size_bytes());
    } else {
      for (T v : values) put(v);
    }
  }

  void put_tag(std::string_view tag) {
    buf_.insert(buf_.end(), tag.begin(), tag.end());
  }

  const std::vector<std::uint8_t>& bytes() const noexcept { return buf_; }
  std::vector<std::uint8_t> take() noexcept { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked cursor; every failure raises FormatError with the offset.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }

  void require(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw FormatError(std::string("truncated ") + what + ": need " +
                            std::to_string(n) + " bytes, " +
                            std::to_string(remaining()) + " remain",
                        pos_);
    }
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get(const char* what) {
    require(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return detail::byteswap_if_big(value);
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void get_array(std::span<T> out, const char* what) {
    require(out.size_bytes(), what);
    std::memcpy(out.data(), bytes_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
    if constexpr (std::endian::native == std::endian::big) {
      for (T& v : out) v = detail::byteswap_if_big(v);
    }
  }

  void expect_tag(std::string_view tag) {
    require(tag.size(), "magic tag");
    if (std::memcmp(bytes_.data() + pos_, tag.data(), tag.size()) != 0) {
      throw FormatError("bad magic tag, expected '" + std::string(tag) + "'",
                        pos_);
    }
    pos_ += tag.size();
  }

  bool peek_tag(std::string_view tag) const {
    return remaining() >= tag.size() &&
           std::memcmp(bytes_.data() + pos_, tag.data(), tag.size()) == 0;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

}  // namespace adanns
