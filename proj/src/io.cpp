#include "rrm/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "rrm/config.hpp"

namespace rrm {

void ByteWriter::put_fixed_string(std::string_view text, std::size_t width) {
  if (text.size() > width) throw std::invalid_argument("fixed string field too long");
  put_bytes(text.data(), text.size());
  bytes_.insert(bytes_.end(), width - text.size(), '\0');
}

std::string ByteReader::get_fixed_string(std::size_t width) {
  std::string text(width, '\0');
  get_bytes(text.data(), width);
  text.resize(std::strlen(text.c_str()));
  return text;
}

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::string& path, const std::vector<char>& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::string& path, std::string_view text) {
  write_file_atomic(path, std::vector<char>(text.begin(), text.end()));
}

std::string file_hash(const std::string& path) {
  const auto bytes = read_file(path);
  return hash_hex(fnv1a64(bytes.data(), bytes.size()));
}

}  // namespace rrm
