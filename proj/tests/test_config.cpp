#include <doctest.h>

#include "catq/config.hpp"
#include "catq/errors.hpp"
#include "support.hpp"

using namespace catq;

TEST_CASE("round trip") {
    ModelConfig c = load_config(test::source_path("configs/baseline.json"));
    std::string once = config_to_json(c);
    std::string twice = config_to_json(parse_config(once));
    CHECK(once == twice);
    CHECK(validate_config(c).ok());

    ModelConfig e = test::exp_config(test::ExpParams{});
    CHECK(config_to_json(parse_config(config_to_json(e))) == config_to_json(e));
}

TEST_CASE("schema errors") {
    test::json j = test::ph_json(2, 1, 1, 1, 2, 2);
    j["K1"] = 2;
    CHECK_FALSE(validate_config(parse_config(j.dump())).ok());

    test::json extra = test::ph_json(2, 1, 1, 1, 2, 2);
    extra["typo"] = 1;
    CHECK_THROWS_AS(parse_config(extra.dump()), ConfigError);

    test::json missing = test::ph_json(2, 1, 1, 1, 2, 2);
    missing.erase("service_h");
    CHECK_THROWS_AS(parse_config(missing.dump()), ConfigError);

    CHECK_THROWS_AS(parse_config("{"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/x.json"), ConfigError);
}

TEST_CASE("named parameters") {
    ModelConfig c = test::ph_config(2, 1, 1, 1, 2, 2);
    apply_parameter(c, "arrivals_normal.rate_H", 0.7);
    CHECK(class_arrival_rate(c.arrivals_normal, kHandoff) == doctest::Approx(0.7).epsilon(1e-9));
    apply_parameter(c, "service_e.rate", 3.0);
    CHECK(ph_fundamental_rate(c.service_e) == doctest::Approx(3.0).epsilon(1e-12));
    apply_parameter(c, "catastrophe.rate", 0.2);
    CHECK(catastrophe_rate(c.catastrophe) == doctest::Approx(0.2).epsilon(1e-9));
    apply_parameter(c, "retrial.rate", 4.0);
    CHECK(c.retrial.theta() == doctest::Approx(4.0).epsilon(1e-12));
    apply_parameter(c, "K2", 2);
    CHECK(c.K2 == 2);
    CHECK_THROWS_AS(apply_parameter(c, "K2", 1.5), ConfigError);
    CHECK_THROWS_AS(apply_parameter(c, "nothing", 1.0), ConfigError);
    CHECK_THROWS_AS(apply_parameter(c, "arrivals_normal.rate_E", 1.0), ConfigError);
}

TEST_CASE("nsga2 section") {
    test::json j = test::ph_json(2, 1, 1, 1, 2, 2);
    j["nsga2"] = {{"population", 12}, {"generations", 3}, {"seed", 5}};
    ModelConfig c = parse_config(j.dump());
    REQUIRE(c.nsga2.has_value());
    CHECK(c.nsga2->population == 12);
    CHECK(c.nsga2->generations == 3);
    CHECK(c.nsga2->seed == 5);
    CHECK(c.nsga2->eps_e == 1e-3);
    CHECK_FALSE(test::ph_config(2, 1, 1, 1, 2, 2).nsga2.has_value());
}
