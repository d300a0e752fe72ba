#include <random>
#include <vector>

#include "doctest.h"
#include "iontherm/csv.hpp"
#include "iontherm/dynamics.hpp"
#include "iontherm/sweep_io.hpp"
#include "iontherm/units.hpp"

using namespace iontherm;

TEST_CASE("format_double produces shortest round-trip decimals") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  CHECK(parse_double("0.1").value() == 0.1);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(mant(rng), expo(rng));
    auto parsed = parse_double(format_double(v));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == v);
  }
  CHECK(!parse_double("12,3").has_value());
  CHECK(!parse_double("").has_value());
  CHECK(!parse_double("1.0x").has_value());
}

TEST_CASE("csv row splitting keeps empty fields") {
  auto cols = split_csv_row("a,b,,d");
  REQUIRE(cols.size() == 4);
  CHECK(cols[2].empty());
  CHECK(split_csv_row("single").size() == 1);
}

TEST_CASE("fock sweep library JSON round trip is bit exact") {
  auto cfg = TrapConfig::single_ion(rad_per_s_from_2pi_khz(50.0),
                                    rad_per_s_from_2pi_khz(1000.0), 0.1, 20);
  std::vector<double> times_us{0.0, 2.0, 4.0, 6.0};
  auto lib = fock_sweep(cfg, 5, times_us);

  const std::string text = sweep_to_json(lib);
  auto back = sweep_from_json(text);

  CHECK(back.config.omega == lib.config.omega);
  CHECK(back.config.nu == lib.config.nu);
  CHECK(back.config.eta[0] == lib.config.eta[0]);
  CHECK(back.config.fock.n_max == lib.config.fock.n_max);
  REQUIRE(back.times_us == lib.times_us);
  REQUIRE(back.n_sweep() == lib.n_sweep());
  for (int n = 0; n <= lib.n_sweep(); ++n)
    for (int j = 0; j < 4; ++j)
      CHECK(back.p[n](0, j) == lib.p[n](0, j));  // exact, not approximate

  // serialize -> parse -> serialize is a fixed point
  CHECK(sweep_to_json(back) == text);
}

TEST_CASE("sweep JSON schema violations are rejected") {
  CHECK_THROWS_AS(sweep_from_json("not json at all"), sweep_format_error);
  CHECK_THROWS_AS(sweep_from_json("{}"), sweep_format_error);
  CHECK_THROWS_AS(
      sweep_from_json(R"({"config": {"omega_rad_s": 1.0}, "times_us": [], "p": []})"),
      sweep_format_error);
}
