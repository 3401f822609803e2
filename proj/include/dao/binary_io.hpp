#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dao/tensor.hpp"

namespace dao {

/// Little-endian byte sink.
class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void raw(std::string_view bytes);
  /// u32 length prefix, then the bytes.
  void str(std::string_view s);
  /// name, u32 rank, u64 dims, f64 values.
  void tensor(std::string_view name, const Shape& shape, std::span<const double> values);
  void doubles(std::span<const double> values);

  const std::string& bytes() const { return bytes_; }
  std::string take() { return std::move(bytes_); }

 private:
  std::string bytes_;
};

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

/// Little-endian byte source; every read past the end throws FormatError.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string raw(std::size_t n);
  std::string str();
  NamedTensor tensor();
  std::vector<double> doubles();

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const;
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace dao
