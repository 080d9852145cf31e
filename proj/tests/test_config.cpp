#include <string>

#include "doctest.h"
#include "thetaskew/config.hpp"
#include "thetaskew/errors.hpp"

using namespace thetaskew;
using namespace thetaskew::config;

namespace {

const std::string kBase =
    "[run]\n"
    "mode = analytic_two_packet\n"
    "seed = 11\n"
    "[deformation]\n"
    "re_kappa = 1\n"
    "theta = 0.05\n"
    "[grid]\n"
    "points = 512\n"
    "dx = 0.03125\n"
    "x0 = -8\n"
    "[model]\n"
    "envelope = flat\n"
    "amplitude_mean = 1\n"
    "imbalance = 0.2\n"
    "momentum1 = 6.283185307179586\n"
    "momentum2 = 0\n";

// Line and key of the error raised by text.
std::pair<int, std::string> error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return {e.line(), e.key()};
  }
  return {-1, ""};
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("minimal config with defaults") {
    const auto c = parse(kBase);
    CHECK(c.mode == Mode::analytic_two_packet);
    CHECK(c.seed == 11);
    CHECK(c.noise.seed == 11);
    CHECK(c.deformation.theta() == 0.05);
    CHECK(c.grid.points == 512);
    CHECK(c.model.momentum1 == doctest::Approx(6.283185307179586));
    CHECK(c.realizations == 1);
    CHECK(c.theta_cal == 0.01);
    CHECK(c.analysis.center == analysis::CenterMethod::peak);
    CHECK_FALSE(c.solver);
    CHECK_FALSE(c.sweep);
  }

  TEST_CASE("comments and whitespace") {
    const auto c = parse("# leading\n" + replace(kBase, "seed = 11", "  seed   =   12   ; trailing") + "\n; end\n");
    CHECK(c.seed == 12);
  }

  TEST_CASE("theta outside the perturbative regime names the bound") {
    try {
      parse(replace(kBase, "theta = 0.05", "theta = 1.5"));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("|theta| < 1") != std::string::npos);
      CHECK(e.key() == "deformation.theta");
      CHECK(e.line() == 6);
    }
  }

  TEST_CASE("strictness") {
    CHECK(error_of(kBase + "bogus = 1\n") == std::make_pair(17, std::string("model.bogus")));
    CHECK(error_of(kBase + "[extra]\n").first == 17);
    CHECK(error_of(kBase + "[model]\n").first == 17);
    CHECK(error_of(kBase + "imbalance = 0.1\n") == std::make_pair(17, std::string("model.imbalance")));
    CHECK(error_of(replace(kBase, "seed = 11", "seed =")) == std::make_pair(3, std::string("run.seed")));
    CHECK(error_of(replace(kBase, "dx = 0.03125", "dx = fast")).second == "grid.dx");
    CHECK(error_of(replace(kBase, "points = 512", "points = 5.5")).second == "grid.points");
    CHECK(error_of(replace(kBase, "x0 = -8", "x0 = nan")).second == "grid.x0");
    CHECK(error_of(replace(kBase, "seed = 11", "seed = -1")).second == "run.seed");
    CHECK(error_of("x = 1\n" + kBase).first == 1);
    CHECK(error_of("[run\n").first == 1);
    CHECK(error_of(kBase + "no equals sign\n").first == 17);
  }

  TEST_CASE("required keys") {
    CHECK(error_of(replace(kBase, "re_kappa = 1\n", "")).second == "deformation.re_kappa");
    CHECK(error_of(replace(kBase, "momentum2 = 0\n", "")).second == "model.momentum2");
    CHECK(error_of(replace(kBase, "envelope = flat", "envelope = gaussian")).second == "model.center1");
  }

  TEST_CASE("range checks") {
    CHECK(error_of(replace(kBase, "re_kappa = 1", "re_kappa = 0")).second == "deformation.re_kappa");
    CHECK(error_of(replace(kBase, "points = 512", "points = 4")).second == "grid.points");
    CHECK(error_of(replace(kBase, "imbalance = 0.2", "imbalance = 1")).second == "model.imbalance");
    CHECK(error_of(kBase + "[noise]\npsf_sigma = -1\n").second == "noise.psf_sigma");
    CHECK(error_of(kBase + "[analysis]\ncenter = median\n").second == "analysis.center");
    CHECK(error_of(kBase + "[analysis]\nregion_lo = 1\nregion_hi = 0\n").second == "analysis.region_hi");
    CHECK(error_of(kBase + "[calibration]\ntheta_cal = 0\n").second == "calibration.theta_cal");
  }

  TEST_CASE("solver section only with solver mode") {
    const std::string solver = "[solver]\nmass = 1\ndt = 0.001\nsteps = 10\n";
    CHECK(error_of(kBase + solver).second == "solver");
    const auto gauss = replace(replace(kBase, "analytic_two_packet", "solver_two_packet"), "envelope = flat",
                               "envelope = gaussian\ncenter1 = -1\ncenter2 = 1\nwidth1 = 2\nwidth2 = 2");
    CHECK(error_of(gauss).second == "solver");
    const auto c = parse(gauss + solver + "potential = harmonic\nomega = 0.5\n");
    REQUIRE(c.solver);
    CHECK(c.solver->potential == Potential::harmonic);
    CHECK(c.solver->omega == 0.5);
    CHECK(error_of(gauss + solver + "omega = 0.5\n").second == "solver.omega");
    CHECK(error_of(gauss + solver + "potential = harmonic\n").second == "solver.omega");
    const auto flat = replace(kBase, "analytic_two_packet", "solver_two_packet");
    CHECK(error_of(flat + solver).second == "model.envelope");
  }

  TEST_CASE("sweep lists") {
    const auto c = parse(kBase + "[sweep]\ntheta = 0.01, 0.02,0.04\nimbalance = 0\norder = 1\n");
    REQUIRE(c.sweep);
    CHECK(c.sweep->theta == std::vector<double>{0.01, 0.02, 0.04});
    CHECK(c.sweep->imbalance == std::vector<double>{0.0});
    CHECK(c.sweep->order == 1);
    CHECK(error_of(kBase + "[sweep]\ntheta = 0.01,,0.02\nimbalance = 0\n").second == "sweep.theta");
    CHECK(error_of(kBase + "[sweep]\ntheta = 0.01, 2\nimbalance = 0\n").second == "sweep.theta");
    CHECK(error_of(kBase + "[sweep]\ntheta = 0.01\n").second == "sweep.imbalance");
  }

  TEST_CASE("hash and seed override") {
    auto a = parse(kBase);
    const auto b = parse(kBase);
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    CHECK(parse(kBase + "\n").hash() != a.hash());
    a.override_seed(99);
    CHECK(a.seed == 99);
    CHECK(a.noise.seed == 99);
    CHECK(a.hash() != b.hash());
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  }

  TEST_CASE("load reports unreadable files") {
    CHECK_THROWS_AS(load("/nonexistent/thetaskew.ini"), ConfigError);
    CHECK(to_string(Mode::solver_two_packet) == "solver_two_packet");
    CHECK(to_string(Envelope::flat) == "flat");
  }
}
