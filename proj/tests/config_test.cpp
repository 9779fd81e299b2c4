#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "gridmarl/config.hpp"

using namespace gridmarl;

TEST_CASE("empty config yields the default small-scale scenario") {
    const ScenarioConfig c = parse_config_text("");
    CHECK(c.n_prosumers == 5);
    CHECK(c.n_consumers == 1);
    CHECK(c.episodes == 10000);
    CHECK(c.dt_hours == 0.25);
    REQUIRE(c.generators.size() == 2);
    CHECK(c.generators[0].kind == GeneratorKind::Base);
    CHECK(c.generators[0].p_min_kw == 5.0);
    CHECK(c.generators[0].p_max_kw == 45.0);
    CHECK(c.generators[1].p_max_kw == 100.0);
    CHECK(c.generators[0].beta == 0.0002);
    CHECK(c.prices.sell_before_11am == 0.05);
    CHECK(c.prices.sell_after_11am == 0.095);
    CHECK(c.prices.conventional_buy == 0.06);
    CHECK(c.prices.buy_levels == std::vector<double>{0.05, 0.06, 0.07, 0.08, 0.09, 0.10});
    CHECK(c.battery.p_charge_max_kw == 2.0);
    CHECK(c.battery.p_discharge_max_kw == -2.5);
    CHECK(c.prosumers.p_inject_max_kw == 10.0);
    CHECK(c.training.batch_size == 64);
    CHECK(c.training.learning_rate == 1e-3);
    CHECK(c.training.tau == 1e-5);
    CHECK(c.training.hidden_spa == std::vector<int>{1000});
    CHECK(c.training.hidden_pa == std::vector<int>{1000, 1000});
}

TEST_CASE("field parsing and validation") {
    SUBCASE("buy levels parse into the action set") {
        const auto c = parse_config_text(
            R"({"prices": {"buy_levels": [0.05,0.06,0.07,0.08,0.09,0.1]}})");
        CHECK(c.prices.buy_levels.size() == 6);
    }

    SUBCASE("negative capacity is rejected with the bound") {
        CHECK_THROWS_WITH_AS(parse_config_text(R"({"battery": {"capacity_kwh": -1}})"),
                             "battery.capacity_kwh: capacity must be > 0", ConfigError);
    }

    SUBCASE("unknown fields are rejected by name") {
        CHECK_THROWS_WITH_AS(parse_config_text(R"({"scenario": {"n_prosumer": 5}})"),
                             doctest::Contains("n_prosumer"), ConfigError);
        CHECK_THROWS_WITH_AS(parse_config_text(R"({"speling": {}})"),
                             doctest::Contains("speling"), ConfigError);
    }

    SUBCASE("invalid JSON is a config error") {
        CHECK_THROWS_AS(parse_config_text("{"), ConfigError);
    }

    SUBCASE("mode strings") {
        CHECK(parse_config_text(R"({"scenario": {"mode": "conventional"}})").mode ==
              RunMode::Conventional);
        CHECK_THROWS_AS(parse_config_text(R"({"scenario": {"mode": "hybrid"}})"), ConfigError);
    }

    SUBCASE("beta bound is enforced") {
        const std::string text =
            R"({"generators": [{"kind": "base", "p_min_kw": 0, "p_max_kw": 100, "beta": 0.006}]})";
        CHECK_THROWS_AS(parse_config_text(text), ConfigError);
    }

    SUBCASE("explicit prosumer list must match the count") {
        const std::string text = R"({
            "scenario": {"n_prosumers": 2},
            "prosumers": {"explicit": [
                {"pv_peak_kw": 2, "consumption_peak_kw": 3, "capacity_kwh": 10, "initial_soc_kwh": 2}
            ]}
        })";
        CHECK_THROWS_AS(parse_config_text(text), ConfigError);
    }
}

TEST_CASE("config file loading") {
    const std::string path = "config_test_tmp.json";
    {
        std::ofstream out(path);
        out << R"({"scenario": {"n_prosumers": 7, "episodes": 3}})";
    }
    const ScenarioConfig c = parse_config(path);
    CHECK(c.n_prosumers == 7);
    CHECK(c.episodes == 3);
    std::remove(path.c_str());

    CHECK_THROWS_AS(parse_config("definitely_missing.json"), ConfigError);
}

TEST_CASE("config hash is stable across field reordering") {
    const auto a = parse_config_text(
        R"({"scenario": {"n_prosumers": 5, "episodes": 100}, "profiles": {"noise_frac": 0.1}})");
    const auto b = parse_config_text(
        R"({"profiles": {"noise_frac": 0.1}, "scenario": {"episodes": 100, "n_prosumers": 5}})");
    CHECK(config_hash(a) == config_hash(b));

    const auto c = parse_config_text(R"({"scenario": {"episodes": 101}})");
    CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("canonical form round trips through the parser") {
    ScenarioConfig c;
    c.episodes = 42;
    c.mode = RunMode::Conventional;
    c.battery.capacity_kwh = 12.0;
    const ScenarioConfig back = parse_config_text(config_to_json(c));
    CHECK(back.episodes == 42);
    CHECK(back.mode == RunMode::Conventional);
    CHECK(back.battery.capacity_kwh == 12.0);
    CHECK(config_hash(back) == config_hash(c));
}
