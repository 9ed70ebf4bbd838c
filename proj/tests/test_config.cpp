#include <doctest.h>

#include "emucal/config.hpp"
#include "emucal/errors.hpp"

using namespace emucal;

TEST_SUITE("config") {
  TEST_CASE("reference file matches the built-in tables") {
    const Config c = load_config(EMUCAL_SOURCE_DIR "/config/reference.json");
    const ParameterSpace ref = reference_space();
    CHECK(c.space.dimension() == 24);
    CHECK(c.space.column_names() == ref.column_names());
    for (Index p = 0; p < ref.dimension(); ++p) {
      CHECK(c.space.spec(p).range == ref.spec(p).range);
      CHECK(c.space.spec(p).default_value == ref.spec(p).default_value);
      CHECK(c.space.spec(p).transform == ref.spec(p).transform);
    }
    CHECK(c.n_regions == 149);
    CHECK(c.design_runs == 50);
    CHECK(c.inversion.stored_samples() == 5000);
    CHECK(c.space.sites()[3].n_obs == 67);
  }

  TEST_CASE("empty object keeps every default") {
    const Config c = parse_config("{}");
    CHECK(c.space.column_names() == reference_space().column_names());
    CHECK(c.n_regions == 149);
  }

  TEST_CASE("malformed input") {
    CHECK_THROWS_AS(parse_config("{\"domain\": "), ParseError);
    CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"domain": {"n_regions": "many"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"domain": {"n_regions": 0}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"inversion": {"burn_in": 1.5}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"inversion": {"total_regions": [0]}})"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
  }

  TEST_CASE("bad parameter ranges are rejected") {
    const char* inverted = R"({"parameters": {"invariant": [
      {"name": "MBL", "transform": "logit", "default": 40, "range": [100, 40]}]}})";
    CHECK_THROWS_AS(parse_config(inverted), Error);
    const char* outside = R"({"parameters": {"invariant": [
      {"name": "MBL", "transform": "logit", "default": 140, "range": [40, 100]}]}})";
    CHECK_THROWS_AS(parse_config(outside), Error);
  }
}
