#include <doctest.h>

#include <sstream>

#include "causalembed/dataset.hpp"
#include "causalembed/rng.hpp"

using namespace causalembed;

namespace {

ColumnarDataset sample_dataset() {
  ColumnarDataset data(3);
  data.add_column({Role::outcome, {"y"}, {1.0, 2.5, -0.125}});
  data.add_column({Role::treatment, {"a0", "a1"},
                   {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}});
  data.add_column({Role::backdoor, {"x1"}, {9.0, 8.0, 7.0}});
  return data;
}

}  // namespace

TEST_CASE("role names round-trip") {
  for (Role role : {Role::treatment, Role::outcome, Role::backdoor,
                    Role::frontdoor, Role::confounder}) {
    CHECK(role_from_name(role_name(role)) == role);
  }
  CHECK_THROWS_AS(role_from_name("bogus"), DataFormatError);
}

TEST_CASE("column access and validation") {
  ColumnarDataset data = sample_dataset();
  CHECK(data.n() == 3);
  CHECK(data.has(Role::treatment));
  CHECK_FALSE(data.has(Role::frontdoor));
  CHECK_THROWS_AS(data.column(Role::frontdoor), MissingColumn);
  const auto row = data.row(Role::treatment, 1);
  CHECK(row[0] == 0.3);
  CHECK(row[1] == 0.4);
  CHECK(data.outcome()[2] == -0.125);

  // Duplicate role rejected.
  CHECK_THROWS_AS(
      data.add_column({Role::outcome, {"y2"}, {0.0, 0.0, 0.0}}),
      InvalidArgument);
  // Wrong length rejected.
  CHECK_THROWS_AS(data.add_column({Role::frontdoor, {"m"}, {1.0}}),
                  DimensionMismatch);
}

TEST_CASE("csv round-trip reproduces exact doubles") {
  PhiloxRng rng(31, 0);
  ColumnarDataset data(20);
  std::vector<double> y(20), a(40), x(20);
  for (std::size_t i = 0; i < 20; ++i) {
    y[i] = rng.normal() * 1e3;
    a[2 * i] = rng.normal() * 1e-7;
    a[2 * i + 1] = rng.uniform01();
    x[i] = rng.normal();
  }
  data.add_column({Role::outcome, {"y"}, y});
  data.add_column({Role::treatment, {"a0", "a1"}, a});
  data.add_column({Role::backdoor, {"x"}, x});

  std::ostringstream out;
  data.save_csv(out);
  std::istringstream in(out.str());
  const ColumnarDataset loaded = ColumnarDataset::load_csv(in, "<roundtrip>");

  REQUIRE(loaded.n() == 20);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(loaded.outcome()[i] == y[i]);
    CHECK(loaded.row(Role::treatment, i)[0] == a[2 * i]);
    CHECK(loaded.row(Role::treatment, i)[1] == a[2 * i + 1]);
    CHECK(loaded.row(Role::backdoor, i)[0] == x[i]);
  }
  // Second save is byte-identical.
  std::ostringstream out2;
  loaded.save_csv(out2);
  CHECK(out2.str() == out.str());
}

TEST_CASE("csv ingestion errors name the offending cell") {
  SUBCASE("non-finite value") {
    std::istringstream in(
        "outcome:y,treatment:a\n1.0,2.0\n3.0,nan\n");
    try {
      ColumnarDataset::load_csv(in, "bad.csv");
      FAIL("expected DataFormatError");
    } catch (const DataFormatError& e) {
      const std::string message = e.what();
      CHECK(message.find("row 2") != std::string::npos);
      CHECK(message.find("treatment:a") != std::string::npos);
    }
  }
  SUBCASE("malformed number") {
    std::istringstream in("outcome:y\nnot_a_number\n");
    CHECK_THROWS_AS(ColumnarDataset::load_csv(in, "bad.csv"),
                    DataFormatError);
  }
  SUBCASE("ragged row") {
    std::istringstream in("outcome:y,backdoor:x\n1.0\n");
    CHECK_THROWS_AS(ColumnarDataset::load_csv(in, "bad.csv"),
                    DataFormatError);
  }
  SUBCASE("header without role tag") {
    std::istringstream in("y\n1.0\n");
    CHECK_THROWS_AS(ColumnarDataset::load_csv(in, "bad.csv"),
                    DataFormatError);
  }
}

TEST_CASE("consecutive same-role header cells form one logical column") {
  std::istringstream in(
      "outcome:y,treatment:a0,treatment:a1,backdoor:x1,backdoor:x2\n"
      "1,2,3,4,5\n");
  const ColumnarDataset data = ColumnarDataset::load_csv(in, "<grouped>");
  CHECK(data.column(Role::treatment).dim() == 2);
  CHECK(data.column(Role::backdoor).dim() == 2);
  CHECK(data.row(Role::backdoor, 0)[1] == 5.0);
}
