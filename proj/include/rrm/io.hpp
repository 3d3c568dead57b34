#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rrm {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written in host order and assume little-endian");

/// Raised for malformed or mismatched artifact files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ByteWriter {
 public:
  template <typename T>
  void put(const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }

  void put_bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const char*>(data);
    bytes_.insert(bytes_.end(), p, p + size);
  }

  /// Fixed-width, zero-padded text field.
  void put_fixed_string(std::string_view text, std::size_t width);

  [[nodiscard]] const std::vector<char>& bytes() const { return bytes_; }
  [[nodiscard]] std::vector<char> take() { return std::move(bytes_); }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<char>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    require(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }

  void get_bytes(void* out, std::size_t size) {
    require(size);
    std::memcpy(out, bytes_.data() + offset_, size);
    offset_ += size;
  }

  std::string get_fixed_string(std::size_t width);

  [[nodiscard]] std::size_t offset() const { return offset_; }
  [[nodiscard]] std::size_t remaining() const { return bytes_.size() - offset_; }

 private:
  void require(std::size_t size) const {
    if (remaining() < size) throw FormatError("truncated file");
  }

  const std::vector<char>& bytes_;
  std::size_t offset_ = 0;
};

std::vector<char> read_file(const std::string& path);

/// Writes to `path.tmp` then renames over `path`.
void write_file_atomic(const std::string& path, const std::vector<char>& bytes);
void write_file_atomic(const std::string& path, std::string_view text);

/// FNV-1a of the file contents, hex encoded.
std::string file_hash(const std::string& path);

}  // namespace rrm
