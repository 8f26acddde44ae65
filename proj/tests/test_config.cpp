#include <doctest.h>

#include <cmath>

#include "rotorsim/config.hpp"
#include "rotorsim/constants.hpp"

using namespace rotorsim;

namespace {

const char* kGoodConfig = R"(
# a full scenario file
[rotor]
class = linear
unit = cm-1
B = 0.39021
alpha_par = 2.0
alpha_perp = 0.5
spin_weight_even = 6
spin_weight_odd = 3

[basis]
jmax = 20

[initial]
type = thermal
T = 30

[dynamics]
t_end = 50
dt = 0.002

[pulse]
type = kick_train
strength = 0.5
count = 1

[pulse]
type = gaussian
fwhm = 0.1
ez = 1.5
t0 = 3.0

[scenario]
seed = 17

[output]
dir = results
)";

}  // namespace

TEST_CASE("config: full round trip") {
  RunConfig cfg = parse_config_text(kGoodConfig);
  CHECK(cfg.top == TopClass::Linear);
  CHECK(cfg.rotor.B == doctest::Approx(0.39021 * kCmInvToRadPerPs).epsilon(1e-14));
  CHECK(cfg.rotor.spin_weights[0] == 6.0);
  CHECK(cfg.rotor.spin_weights[1] == 3.0);
  CHECK(cfg.j_max == 20);
  CHECK(cfg.thermal);
  CHECK(cfg.temperature == 30.0);
  CHECK(cfg.t_end == 50.0);
  CHECK(cfg.dt == 0.002);
  REQUIRE(cfg.pulses.size() == 2);
  CHECK(std::holds_alternative<KickTrain>(cfg.pulses[0]));
  CHECK(std::holds_alternative<GaussianPulse>(cfg.pulses[1]));
  CHECK(cfg.seed == 17);
  CHECK(cfg.out_dir == "results");
  CHECK(cfg.config_hash.size() == 16);
}

TEST_CASE("config: unknown keys and sections are rejected with location") {
  CHECK_THROWS_WITH_AS(parse_config_text("[rotor]\nbogus_key = 1\n"),
                       doctest::Contains("bogus_key"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("[rotor]\nbogus_key = 1\n"),
                       doctest::Contains("line 2"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("[nonsense]\n"),
                       doctest::Contains("nonsense"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("B = 1\n"), ConfigError);  // outside section
  CHECK_THROWS_AS(parse_config_text("[rotor]\nB 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[rotor]\nB = 1\nB = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[rotor]\n[rotor]\n"), ConfigError);
}

TEST_CASE("config: malformed values rejected") {
  CHECK_THROWS_WITH_AS(parse_config_text("[rotor]\nB = abc\n"),
                       doctest::Contains("'B'"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[rotor]\nB = inf\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[basis]\njmax = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[basis]\njmax = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[initial]\ntype = thermal\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[initial]\ntype = maybe\n"), ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("[pulse]\ntype = gaussian\nfwhm = -0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[pulse]\ntype = warp\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[dynamics]\ndt = 0\n"), ConfigError);
}

TEST_CASE("config: units") {
  RunConfig ghz = parse_config_text("[rotor]\nunit = ghz\nB = 11.0\n");
  CHECK(ghz.rotor.B == doctest::Approx(11.0 * kGHzToRadPerPs).epsilon(1e-14));
  RunConfig rad = parse_config_text("[rotor]\nB = 2.0\n");
  CHECK(rad.rotor.B == 2.0);
  CHECK_THROWS_AS(parse_config_text("[rotor]\nunit = hartree\nB = 1\n"),
                  ConfigError);
}

TEST_CASE("config: auto classification checks anisotropy sign") {
  RunConfig ok = parse_config_text(
      "[rotor]\nclass = auto\nA = 1\nB = 1\nC = 2\nalpha_par = 2\nalpha_perp = 1\n");
  CHECK(ok.top == TopClass::ProlateSymmetric);
  CHECK_THROWS_AS(
      parse_config_text("[rotor]\nclass = auto\nA = 1\nB = 1\nC = 2\n"
                        "alpha_par = 1\nalpha_perp = 2\n"),
      ConfigError);
  RunConfig obl = parse_config_text(
      "[rotor]\nclass = auto\nA = 1\nB = 2\nC = 2\nalpha_par = 1\nalpha_perp = 2\n");
  CHECK(obl.top == TopClass::OblateSymmetric);
}

TEST_CASE("config: pure state consistency with the basis") {
  CHECK_THROWS_AS(
      parse_config_text("[basis]\njmax = 3\n[initial]\ntype = pure\nj = 4\n"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("[initial]\ntype = pure\nj = 1\nk = 1\n"),  // linear k != 0
      ConfigError);
  RunConfig ok = parse_config_text(
      "[rotor]\nclass = prolate\nA = 1\nB = 1\nC = 2\n"
      "[initial]\ntype = pure\nj = 1\nk = 1\nm = -1\n");
  CHECK(ok.pure_state == RotorKet{1, 1, -1});
}

TEST_CASE("config: same text hashes identically, different text differently") {
  RunConfig a = parse_config_text(kGoodConfig);
  RunConfig b = parse_config_text(kGoodConfig);
  CHECK(a.config_hash == b.config_hash);
  RunConfig c = parse_config_text(std::string(kGoodConfig) + "\n# tweak\n");
  CHECK(a.config_hash != c.config_hash);
}
