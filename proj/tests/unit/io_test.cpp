#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fosr/errors.hpp"
#include "fosr/io.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace fosr;

TEST_CASE("doubles round trip through text") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, std::nextafter(1.0, 2.0)})
    CHECK(std::stod(io::format_double(v)) == v);
  CHECK(io::format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(io::format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(io::format_double(-0.0) == "0");
}

TEST_CASE("csv round trip") {
  Eigen::MatrixXd m(2, 3);
  m << 1, 2.5, -3, 1e-12, 0.1, 7;
  std::stringstream ss;
  io::write_csv(ss, {"a", "b", "c"}, m);
  CHECK(ss.str() == "a,b,c\n1,2.5,-3\n1e-12,0.1,7\n");
  const io::CsvMatrix back = io::read_csv(ss);
  CHECK(back.header == std::vector<std::string>{"a", "b", "c"});
  CHECK(back.values == m);
}

TEST_CASE("ragged or non-numeric csv is rejected") {
  std::stringstream ragged("a,b\n1,2\n3\n");
  CHECK_THROWS(io::read_csv(ragged));
  std::stringstream text("a,b\n1,x\n");
  CHECK_THROWS(io::read_csv(text));
}

TEST_CASE("headers") {
  CHECK(io::prefixed_header("x", 3) == std::vector<std::string>{"x1", "x2", "x3"});
  const std::vector<double> grid{0.0, 0.25, 1.0};
  CHECK(io::header_as_numbers(io::numeric_header(grid)) == grid);
  CHECK_THROWS_AS(io::header_as_numbers({"0", "t"}), ConfigError);
}

TEST_CASE("key-value files") {
  std::stringstream ss("# comment\n\nN = 10\n  rho=0.5 \nname = two words\n");
  const io::KeyValue kv = io::parse_key_value(ss);
  CHECK(kv.get_int("N") == 10);
  CHECK(kv.get_double("rho") == 0.5);
  CHECK(kv.get("name") == "two words");
  CHECK(kv.get_int("I", 7) == 7);
  CHECK_THROWS_WITH_AS(kv.get("I"), "missing required key 'I'", ConfigError);
  CHECK_THROWS_AS(kv.get_int("rho"), ConfigError);

  io::KeyValue out;
  out.set("b", 2);
  out.set("a", true);
  out.set("c", 0.25);
  out.set("b", 3);
  std::stringstream text;
  io::write_key_value(text, out);
  CHECK(text.str() == "b = 3\na = true\nc = 0.25\n");
}

TEST_CASE("index lists are 1-based") {
  CHECK(io::join_indices({0, 4, 9}) == "1;5;10");
  CHECK(io::join_indices({}).empty());
}
