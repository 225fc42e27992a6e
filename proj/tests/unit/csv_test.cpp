#include <filesystem>
#include <fstream>

#include "acr/csv.hpp"
#include "acr/error.hpp"
#include "doctest.h"

using namespace acr;

TEST_CASE("empty file is a ParseError") {
  CHECK_THROWS_AS(parse_csv(""), ParseError);
}

TEST_CASE("labels are remapped densely and the mapping is recorded") {
  const CsvDataset d = parse_csv("a,b,label\n1,2,9\n3,4,5\n5,6,7\n7,8,5\n");
  CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(d.label_map == LabelMap{{5, 0}, {7, 1}, {9, 2}});
  CHECK(d.set.y == std::vector<int>{2, 0, 1, 0});
  CHECK(d.set.classes == 3);
  CHECK(d.set.x == Tensor2::from_rows({{1, 2}, {3, 4}, {5, 6}, {7, 8}}));
}

TEST_CASE("label column may sit anywhere and use a custom name") {
  const CsvDataset d = parse_csv("cls,x\n1,0.5\n0,-0.25\n", CsvSchema{"cls"});
  CHECK(d.set.x == Tensor2::from_rows({{0.5}, {-0.25}}));
  CHECK(d.set.y == std::vector<int>{1, 0});
}

TEST_CASE("quoted fields and CRLF line endings") {
  const CsvDataset d = parse_csv("\"x, one\",label\r\n\"1.5\",3\r\n2,4\r\n");
  CHECK(d.feature_names == std::vector<std::string>{"x, one"});
  CHECK(d.set.x == Tensor2::from_rows({{1.5}, {2.0}}));
}

TEST_CASE("errors carry line and column") {
  try {
    parse_csv("a,b,label\n1,2,0\n1,oops,1\n");
    FAIL("expected TypeError");
  } catch (const TypeError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 3);
  }
  try {
    parse_csv("a,b,label\n1,2,0\n1,2\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_csv("a,b\n1,2\n"), ParseError);
  CHECK_THROWS_AS(parse_csv("a,label\n1,x\n"), TypeError);
  CHECK_THROWS_AS(parse_csv("a,label\n1,1.5\n"), TypeError);
  CHECK_THROWS_AS(parse_csv("a,label\n\"1,0\n"), ParseError);
  CHECK_THROWS_AS(parse_csv("a,label\n"), ParseError);
}

TEST_CASE("an existing mapping is applied and unknown labels are rejected") {
  const LabelMap m{{5, 0}, {7, 1}};
  const CsvDataset d = parse_csv("a,label\n1,7\n2,5\n", {}, &m);
  CHECK(d.set.y == std::vector<int>{1, 0});
  CHECK_THROWS_AS(parse_csv("a,label\n1,8\n", {}, &m), ParseError);
}

TEST_CASE("3-row fixture round-trips through write and read exactly") {
  const CsvDataset d = parse_csv("f1,f2,label\n0.1,-3.25e-7,4\n1e300,2.5,2\n0.30000000000000004,7,4\n");
  const auto path = std::filesystem::temp_directory_path() / "acr_csv_roundtrip.csv";
  write_csv(path, d);
  const CsvDataset back = load_csv(path);
  CHECK(back.set.x == d.set.x);
  CHECK(back.set.y == d.set.y);
  CHECK(back.label_map == d.label_map);
  CHECK(back.feature_names == d.feature_names);
  std::filesystem::remove(path);
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(0.30000000000000004)) == 0.30000000000000004);
}
