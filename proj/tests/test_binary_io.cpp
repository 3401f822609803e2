#include <doctest.h>

#include <cmath>
#include <limits>

#include "dao/binary_io.hpp"
#include "dao/error.hpp"

using namespace dao;

TEST_CASE("little-endian encoding") {
  ByteWriter w;
  w.u32(0x01020304);
  const std::string& b = w.bytes();
  REQUIRE(b.size() == 4);
  CHECK(b[0] == 0x04);
  CHECK(b[3] == 0x01);
  ByteWriter f;
  f.f64(1.0);
  CHECK(static_cast<unsigned char>(f.bytes()[7]) == 0x3f);
  CHECK(static_cast<unsigned char>(f.bytes()[6]) == 0xf0);
}

TEST_CASE("round trip of every record type") {
  ByteWriter w;
  w.u32(7);
  w.u64(1ULL << 40);
  w.f64(-0.1);
  w.str("hello");
  w.tensor("layer.W", {2, 3}, std::vector<double>{1, 2, 3, 4, 5, std::numeric_limits<double>::denorm_min()});
  w.doubles(std::vector<double>{std::nan(""), -0.0});
  ByteReader r(w.bytes());
  CHECK(r.u32() == 7);
  CHECK(r.u64() == 1ULL << 40);
  CHECK(r.f64() == -0.1);
  CHECK(r.str() == "hello");
  const auto t = r.tensor();
  CHECK(t.name == "layer.W");
  CHECK(t.shape == Shape{2, 3});
  CHECK(t.values[5] == std::numeric_limits<double>::denorm_min());
  const auto d = r.doubles();
  CHECK(std::isnan(d[0]));
  CHECK(std::signbit(d[1]));
  CHECK(r.at_end());
  CHECK_THROWS_AS(r.u32(), FormatError);
}

TEST_CASE("truncated input is rejected") {
  ByteWriter w;
  w.tensor("x", {4}, std::vector<double>{1, 2, 3, 4});
  const std::string cut = w.bytes().substr(0, w.bytes().size() - 1);
  ByteReader r(cut);
  CHECK_THROWS_AS(r.tensor(), FormatError);
  ByteWriter big;
  big.u64(std::numeric_limits<std::uint64_t>::max());
  ByteReader rb(big.bytes());
  CHECK_THROWS_AS(rb.doubles(), FormatError);
}
