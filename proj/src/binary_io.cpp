#include "dao/binary_io.hpp"

#include <bit>
#include <cstring>

#include "dao/error.hpp"

namespace dao {

namespace {
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

void append_f64s(std::string& bytes, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    const std::size_t offset = bytes.size();
    bytes.resize(offset + values.size() * sizeof(double));
    if (!values.empty()) std::memcpy(bytes.data() + offset, values.data(), values.size() * sizeof(double));
  } else {
    for (double v : values) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }
  }
}
}  // namespace

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::raw(std::string_view bytes) { bytes_.append(bytes); }

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  raw(s);
}

void ByteWriter::doubles(std::span<const double> values) {
  u64(values.size());
  append_f64s(bytes_, values);
}

void ByteWriter::tensor(std::string_view name, const Shape& shape, std::span<const double> values) {
  str(name);
  u32(static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) u64(d);
  append_f64s(bytes_, values);
}

void ByteReader::need(std::size_t n) const {
  if (bytes_.size() - pos_ < n) throw FormatError("truncated record");
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
  pos_ += 8;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::raw(std::size_t n) {
  need(n);
  std::string out(bytes_.substr(pos_, n));
  pos_ += n;
  return out;
}

std::string ByteReader::str() { return raw(u32()); }

std::vector<double> ByteReader::doubles() {
  const auto n = u64();
  if (n > kMaxElements) throw FormatError("implausible array length");
  need(n * 8);
  std::vector<double> out(n);
  for (auto& v : out) v = f64();
  return out;
}

NamedTensor ByteReader::tensor() {
  NamedTensor t;
  t.name = str();
  const auto rank = u32();
  if (rank == 0 || rank > kMaxRank) throw FormatError("tensor '" + t.name + "' has invalid rank");
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const auto d = u64();
    if (d == 0 || d > kMaxElements) throw FormatError("tensor '" + t.name + "' has invalid dimension");
    count *= d;
    if (count > kMaxElements) throw FormatError("tensor '" + t.name + "' is implausibly large");
    t.shape.push_back(d);
  }
  need(count * 8);
  t.values.resize(count);
  for (auto& v : t.values) v = f64();
  return t;
}

}  // namespace dao
