#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "gridmarl/profiles.hpp"

using namespace gridmarl;

namespace {

ProfileSpec consumption_spec(double peak, double noise) {
    ProfileSpec s;
    s.kind = ProfileKind::Consumption;
    s.peak_kw = peak;
    s.noise_frac = noise;
    return s;
}

int argmax_slot(const DayProfile& p) {
    int best = 0;
    for (int s = 1; s < kSlotsPerDay; ++s)
        if (p[s] > p[best]) best = s;
    return best;
}

std::string write_temp(const std::string& content) {
    const std::string path = "profiles_test_tmp.csv";
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

} // namespace

TEST_CASE("consumption shape") {
    Rng rng(1);
    const DayProfile p = synth_consumption(consumption_spec(3.0, 0.0), rng);

    // Evening peak between 18:00 and 21:00 at the configured level.
    const int peak_slot = argmax_slot(p);
    CHECK(peak_slot >= 72);
    CHECK(peak_slot <= 84);
    CHECK(*std::max_element(p.values_kw.begin(), p.values_kw.end()) == doctest::Approx(3.0));

    // Base-load floor.
    CHECK(*std::min_element(p.values_kw.begin(), p.values_kw.end()) >= 0.15);
}

TEST_CASE("consumption determinism in the seed") {
    Rng a(77);
    Rng b(77);
    const DayProfile pa = synth_consumption(consumption_spec(3.0, 0.2), a);
    const DayProfile pb = synth_consumption(consumption_spec(3.0, 0.2), b);
    CHECK(pa.values_kw == pb.values_kw);

    Rng c(78);
    const DayProfile pc = synth_consumption(consumption_spec(3.0, 0.2), c);
    CHECK(pa.values_kw != pc.values_kw);
}

TEST_CASE("pv shape") {
    Rng rng(5);
    const DayProfile p = synth_pv(6.0, 0.0, rng);

    CHECK(p[0] == 0.0);
    CHECK(p[23] == 0.0);
    CHECK(p[24] == 0.0);
    CHECK(p[76] == 0.0);
    CHECK(p[95] == 0.0);

    const int peak = argmax_slot(p);
    CHECK(peak >= 48);
    CHECK(peak <= 52);
    CHECK(*std::max_element(p.values_kw.begin(), p.values_kw.end()) <= 6.0);

    // Capacity factor of the noiseless bell.
    double energy = 0.0;
    for (int s = 0; s < kSlotsPerDay; ++s) energy += p[s] * 0.25;
    CHECK(energy >= 0.15 * 24.0 * 6.0);
    CHECK(energy <= 0.35 * 24.0 * 6.0);

    // Exactly unimodal at noise 0: the sign of the difference flips once.
    int flips = 0;
    int sign = 0;
    for (int s = 1; s < kSlotsPerDay; ++s) {
        const double d = p[s] - p[s - 1];
        if (d == 0.0) continue;
        const int ds = d > 0.0 ? 1 : -1;
        if (sign != 0 && ds != sign) ++flips;
        sign = ds;
    }
    CHECK(flips == 1);
}

TEST_CASE("pv respects the peak bound under noise") {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        const DayProfile p = synth_pv(4.0, 0.4, rng);
        CHECK(*std::max_element(p.values_kw.begin(), p.values_kw.end()) <= 4.0);
        CHECK_NOTHROW(p.validate());
    }
}

TEST_CASE("generated profiles satisfy the invariants under fuzzing") {
    Rng rng(13);
    for (int i = 0; i < 200; ++i) {
        const double peak = rng.uniform(0.5, 40.0);
        const double noise = rng.uniform(0.0, 0.49);
        const DayProfile c = synth_consumption(consumption_spec(peak, noise), rng);
        CHECK_NOTHROW(c.validate());
        CHECK(*std::min_element(c.values_kw.begin(), c.values_kw.end()) > 0.05 * peak);
        const DayProfile v = synth_pv(peak, noise, rng);
        CHECK_NOTHROW(v.validate());
    }
}

TEST_CASE("profile csv loading") {
    SUBCASE("well-formed file") {
        std::string body = "slot,home_a,home_b\n";
        for (int s = 0; s < 96; ++s)
            body += std::to_string(s) + ",1.5,0.25\n";
        const std::string path = write_temp(body);
        const auto profiles = load_profiles_csv(path);
        REQUIRE(profiles.size() == 2);
        CHECK(profiles[0].name == "home_a");
        CHECK(profiles[1].profile[10] == doctest::Approx(0.25));
        std::remove(path.c_str());
    }

    SUBCASE("crlf line endings are accepted") {
        std::string body = "slot,x\r\n";
        for (int s = 0; s < 96; ++s) body += std::to_string(s) + ",2.0\r\n";
        const std::string path = write_temp(body);
        CHECK(load_profiles_csv(path).size() == 1);
        std::remove(path.c_str());
    }

    SUBCASE("row count is enforced") {
        std::string body = "slot,x\n";
        for (int s = 0; s < 95; ++s) body += std::to_string(s) + ",1.0\n";
        const std::string path = write_temp(body);
        CHECK_THROWS_WITH_AS(load_profiles_csv(path),
                             doctest::Contains("expected 96 rows"), ProfileParseError);
        std::remove(path.c_str());
    }

    SUBCASE("negative values name the row") {
        std::string body = "slot,x\n";
        for (int s = 0; s < 96; ++s)
            body += std::to_string(s) + (s == 10 ? ",-1.0\n" : ",1.0\n");
        const std::string path = write_temp(body);
        CHECK_THROWS_WITH_AS(load_profiles_csv(path), doctest::Contains("row 10"),
                             ProfileParseError);
        std::remove(path.c_str());
    }

    SUBCASE("non-numeric cell names row and column") {
        std::string body = "slot,x\n";
        for (int s = 0; s < 96; ++s)
            body += std::to_string(s) + (s == 4 ? ",oops\n" : ",1.0\n");
        const std::string path = write_temp(body);
        CHECK_THROWS_WITH_AS(load_profiles_csv(path), doctest::Contains("row 4"),
                             ProfileParseError);
        std::remove(path.c_str());
    }
}
