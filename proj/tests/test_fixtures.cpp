#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "thetaskew/errors.hpp"
#include "thetaskew/fixtures.hpp"

using namespace thetaskew;
using namespace thetaskew::fixtures;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("fixtures") {
  TEST_CASE("format_double round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(0.5) == "0.5");
  }

  TEST_CASE("csv quoting") {
    CHECK(csv_quote("plain") == "plain");
    CHECK(csv_quote("a,b") == "\"a,b\"");
    CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_quote("two\nlines") == "\"two\nlines\"");
  }

  TEST_CASE("save and load round-trip") {
    const std::vector<Record> recs{{"alpha", "x=1;y=[0, 1]", 1.0 / 3.0, 1e-15, "scalar", "2026-10-15"},
                                   {"beta", "quote \"q\"", -2.0, 0.0, "other", "2026-10-15"}};
    const auto path = temp_path("thetaskew_fixture_roundtrip.csv");
    save(path, recs);
    const auto set = load(path);
    CHECK(set.version() == kVersion);
    REQUIRE(set.records().size() == 2);
    CHECK(set.get("alpha").inputs == recs[0].inputs);
    CHECK(set.value("alpha") == recs[0].value);
    CHECK(set.get("beta").inputs == recs[1].inputs);
    CHECK_THROWS_AS(set.get("gamma"), InvalidArgument);
    std::remove(path.c_str());
  }

  TEST_CASE("malformed files are rejected") {
    const auto path = temp_path("thetaskew_fixture_bad.csv");
    {
      std::ofstream(path) << "name,inputs,value,error_bound,oracle,date\nx,1,2,3,4,5\n";
    }
    CHECK_THROWS_AS(load(path), InvalidArgument);  // no version line
    {
      std::ofstream(path) << "# thetaskew fixtures version 1\nname,inputs,value,error_bound,oracle,date\nx,1,2\n";
    }
    CHECK_THROWS_AS(load(path), InvalidArgument);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load(path), InvalidArgument);
  }

  TEST_CASE("the shipped file carries every record with an oracle and a date") {
    const auto& set = tsk_test::fixtures();
    CHECK(set.records().size() >= 20);
    for (const auto& r : set.records()) {
      CHECK_FALSE(r.oracle.empty());
      CHECK(r.date.size() == 10);
    }
  }
}
