#include <string>

#include "doctest.h"

#include "core/json_config.hpp"
#include "support/testlib.hpp"

using namespace cfm;
using nlohmann::json;

TEST_CASE("basis config round trip and knot forms") {
  SplineConfig cfg = make_spline_config(2, 4, -1.0, 3.0);
  cfg.clamp = true;
  const SplineConfig back = spline_from_json(spline_to_json(cfg));
  CHECK(back == cfg);

  // a knot count expands to equally spaced interior knots
  const SplineConfig counted = spline_from_json(json{{"degree", 2}, {"knots", 4}});
  CHECK(counted == make_spline_config(2, 4));
  const SplineConfig named = spline_from_json(json{{"degree", 2}, {"n_knots", 4}});
  CHECK(named == counted);

  // an explicit array is taken as-is
  const SplineConfig listed =
      spline_from_json(json{{"degree", 1}, {"knots", {0.25, 0.5}}, {"domain", {0.0, 1.0}}});
  CHECK(listed.knots == std::vector<double>{0.25, 0.5});
  CHECK(listed.degree == 1);

  // defaults: cubic with ten knots on the unit interval
  const SplineConfig bare = spline_from_json(json::object());
  CHECK(bare == make_spline_config(3, 10));

  CHECK(testlib::error_kind([] { spline_from_json(json::array()); }) == ErrorKind::Parse);
  CHECK(testlib::error_kind([] { spline_from_json(json{{"degree", "cubic"}}); }) ==
        ErrorKind::Parse);
  CHECK(testlib::error_kind([] { spline_from_json(json{{"knots", -2}}); }) == ErrorKind::Parse);
  CHECK(testlib::error_kind([] { spline_from_json(json{{"domain", {1.0}}}); }) ==
        ErrorKind::Parse);
  // structurally valid JSON but an impossible basis: not a parse error
  CHECK(testlib::error_kind([] { spline_from_json(json{{"degree", -1}}); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("hyper config: defaults, round trip, positivity") {
  Hyperparams h;
  h.b0 = 9.0;
  h.eta_sigma = 0.5;
  CHECK(hyper_from_json(hyper_to_json(h)) == h);
  CHECK(hyper_from_json(json::object()) == Hyperparams{});

  CHECK(testlib::error_kind([] { hyper_from_json(json{{"b0", 0.0}}); }) ==
        ErrorKind::InvalidArgument);
  CHECK(testlib::error_kind([] { hyper_from_json(json{{"nu_tau", "big"}}); }) ==
        ErrorKind::Parse);
}

TEST_CASE("chain config merges onto its base") {
  ChainConfig base;
  base.burnin = 500;
  base.samples = 700;
  base.thin = 2;
  base.seed = 9;
  base.threads = 2;

  const ChainConfig merged = chain_from_json(json{{"threads", 4}}, base);
  CHECK(merged.burnin == 500);
  CHECK(merged.samples == 700);
  CHECK(merged.thin == 2);
  CHECK(merged.seed == 9);
  CHECK(merged.threads == 4);

  CHECK(chain_from_json(chain_to_json(base)) == base);
  CHECK(chain_from_json(json::object()) == ChainConfig{});

  CHECK(testlib::error_kind([] { chain_from_json(json{{"samples", 0}}); }) == ErrorKind::Parse);
  CHECK(testlib::error_kind([] { chain_from_json(json{{"burnin", -3}}); }) == ErrorKind::Parse);
  CHECK(testlib::error_kind([] { chain_from_json(json{{"thin", 0}}); }) == ErrorKind::Parse);
  CHECK(testlib::error_kind([] { chain_from_json(json{{"threads", 0}}); }) == ErrorKind::Parse);
  CHECK(testlib::error_kind([] { chain_from_json(json{{"seed", -1}}); }) == ErrorKind::Parse);
}

TEST_CASE("grid round trip") {
  TimeGrid g;
  g.points = {0.0, 0.25, 1.0};
  CHECK(grid_from_json(grid_to_json(g)) == g);
  CHECK(testlib::error_kind([] { grid_from_json(json{{"points", {1.0, 0.5}}}); }) ==
        ErrorKind::Validation);
  CHECK(testlib::error_kind([] { grid_from_json(json{{"points", {1.0}}}); }) ==
        ErrorKind::Validation);
}

TEST_CASE("simulate spec: fixed values broadcast or match the basis size") {
  json j{{"subjects", 3},
         {"channels", 2},
         {"times", 20},
         {"basis", {{"degree", 1}, {"knots", 1}}},  // three basis functions
         {"fixed", {{"tau2", 0.5}, {"beta", {1.0, 2.0, 3.0}}, {"sigma2", 0.1}}},
         {"seed", 77}};
  const SimulateSpec spec = simulate_from_json(j);
  CHECK(spec.subjects == 3);
  CHECK(spec.channels == 2);
  CHECK(spec.times == 20);
  CHECK(spec.seed == 77);
  REQUIRE(spec.fixed.tau2.has_value());
  CHECK(*spec.fixed.tau2 == std::vector<double>(3, 0.5));  // scalar broadcast
  REQUIRE(spec.fixed.beta.has_value());
  CHECK(*spec.fixed.beta == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(spec.fixed.sigma2 == 0.1);
  CHECK_FALSE(spec.fixed.gamma2.has_value());

  CHECK(simulate_from_json(simulate_to_json(spec)).fixed.beta == spec.fixed.beta);

  json wrong = j;
  wrong["fixed"]["beta"] = {1.0, 2.0};  // basis has three functions
  CHECK(testlib::error_kind([&] { simulate_from_json(wrong); }) == ErrorKind::Parse);
  json none = j;
  none["subjects"] = 0;
  CHECK(testlib::error_kind([&] { simulate_from_json(none); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("fit spec round trip") {
  FitSpec spec;
  spec.basis = make_spline_config(2, 3);
  spec.hyper.b0 = 25.0;
  spec.chain.samples = 250;
  spec.chain.seed = 5;
  const FitSpec back = fit_from_json(fit_to_json(spec));
  CHECK(back.basis == spec.basis);
  CHECK(back.hyper == spec.hyper);
  CHECK(back.chain == spec.chain);
}

TEST_CASE("json text parsing reports the source name") {
  const json ok = parse_json_text("{\"a\": 1}", "inline");
  CHECK(ok.at("a") == 1);
  try {
    parse_json_text("{oops", "config.json");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("config.json") != std::string::npos);
  }
}

TEST_CASE("field errors name the offending key") {
  try {
    chain_from_json(json{{"burnin", "lots"}});
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("'burnin'") != std::string::npos);
  }
  try {
    spline_from_json(json{{"clamp", 3}});
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("'clamp'") != std::string::npos);
  }
}
