#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "pulseline/formats.hpp"

using namespace pulseline;

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(72.0) == "72");
  CHECK(format_double(-69.41) == "-69.41");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_double(std::nan("")) == "nan");
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = d(gen);
    CHECK(parse_double(format_double(v)) == v);
  }
}

TEST_CASE("parse helpers") {
  CHECK(parse_double(" 1.5 ") == 1.5);
  CHECK(std::isinf(parse_double("inf")));
  CHECK(std::isnan(parse_double("nan")));
  CHECK_THROWS_AS(parse_double("abc"), Error);
  CHECK_THROWS_AS(parse_double("1.5x"), Error);
  CHECK(parse_long("42") == 42);
  CHECK_THROWS_AS(parse_long("4.2"), Error);
  const auto f = split("a, b,,c", ',');
  REQUIRE(f.size() == 4);
  CHECK(trim(f[1]) == "b");
  CHECK(f[2].empty());
}

TEST_CASE("text files round-trip and create parent directories") {
  const auto dir = testing::temp_dir("formats");
  write_text_file(dir / "a" / "b.txt", "x\n\ny\n");
  CHECK(read_text_file(dir / "a" / "b.txt") == "x\n\ny\n");
  CHECK(read_lines(dir / "a" / "b.txt") == std::vector<std::string>{"x", "y"});
  CHECK_THROWS_AS(read_text_file(dir / "missing.txt"), Error);
}
