#include <doctest.h>

#include <cmath>
#include <vector>

#include "gridmarl/grid.hpp"
#include "gridmarl/rng.hpp"

using namespace gridmarl;

namespace {

GeneratorSpec base_unit() {
    GeneratorSpec g;
    g.kind = GeneratorKind::Base;
    g.p_min_kw = 5.0;
    g.p_max_kw = 45.0;
    g.cost_a = 0.0004;
    g.cost_b = 0.03;
    g.cost_c = 0.2;
    g.beta = 0.0002;
    return g;
}

GeneratorSpec reserve_unit() {
    GeneratorSpec g;
    g.kind = GeneratorKind::Reserve;
    g.p_min_kw = 0.0;
    g.p_max_kw = 100.0;
    g.cost_a = 0.001;
    g.cost_b = 0.07;
    g.cost_c = 0.5;
    g.beta = 0.0002;
    return g;
}

// Independent oracle: exhaustive 1e-4 kW grid search for the gross power
// whose net output is closest to the target.
double brute_force_gross(double net_target, double beta, double p_max) {
    double best_p = 0.0;
    double best_err = std::abs(net_target);
    const long steps = static_cast<long>(p_max / 1e-4) + 1;
    for (long i = 0; i <= steps; ++i) {
        const double p = std::min(i * 1e-4, p_max);
        const double err = std::abs(p - beta * p * p - net_target);
        if (err < best_err) {
            best_err = err;
            best_p = p;
        }
    }
    return best_p;
}

double total_net(const DispatchResult& r, const std::vector<GeneratorSpec>& gens) {
    double net = 0.0;
    for (std::size_t i = 0; i < gens.size(); ++i) {
        const double p = r.per_generator_p_kw[i];
        net += p - gens[i].beta * p * p;
    }
    return net;
}

} // namespace

TEST_CASE("generator cost rate") {
    const GeneratorSpec g = base_unit();
    CHECK(generator_cost_rate(0.0, g) == 0.0);

    GeneratorSpec small = g;
    small.cost_a = 0.0004;
    small.cost_b = 0.03;
    small.cost_c = 0.2;
    CHECK(generator_cost_rate(10.0, small) == doctest::Approx(0.54).epsilon(1e-12));

    // Polynomial oracle: evaluate independently at p = 45.
    const double p = 45.0;
    const double expected = 0.0004 * p * p + 0.03 * p + 0.2;
    CHECK(generator_cost_rate(p, g) == doctest::Approx(expected).epsilon(1e-15));

    CHECK_THROWS_AS(generator_cost_rate(-1.0, g), std::domain_error);
    CHECK_THROWS_AS(generator_cost_rate(45.1, g), std::domain_error);
}

TEST_CASE("generator cost rate is convex") {
    const GeneratorSpec g = base_unit();
    double prev_diff = -1e300;
    double prev = generator_cost_rate(1.0, g);
    for (double p = 2.0; p <= 45.0; p += 1.0) {
        const double cur = generator_cost_rate(p, g);
        const double diff = cur - prev;
        CHECK(diff >= prev_diff - 1e-12);
        prev_diff = diff;
        prev = cur;
    }
}

TEST_CASE("net output") {
    CHECK(net_output(0.0, 0.0002) == 0.0);
    CHECK(net_output(45.0, 0.0002) == doctest::Approx(44.595).epsilon(1e-12));
    CHECK(net_output(100.0, 0.0002) == doctest::Approx(98.0).epsilon(1e-12));
}

TEST_CASE("dispatch single base unit") {
    const std::vector<GeneratorSpec> gens{base_unit()};

    SUBCASE("interior point matches the bisection oracle") {
        const DispatchResult r = dispatch(40.0, gens, 0.25);
        CHECK(r.per_generator_p_kw[0] == doctest::Approx(40.3246).epsilon(1e-4));
        CHECK(r.reserve_energy_kwh == 0.0);
        CHECK(std::abs(total_net(r, gens) - 40.0) < 1e-9);
        const double oracle = brute_force_gross(40.0, 0.0002, 45.0);
        CHECK(std::abs(r.per_generator_p_kw[0] - oracle) < 2e-4);
    }

    SUBCASE("net capacity boundary hits the cap exactly") {
        const DispatchResult r = dispatch(44.595, gens, 0.25);
        CHECK(r.per_generator_p_kw[0] == doctest::Approx(45.0).epsilon(1e-10));
    }

    SUBCASE("demand above capacity is infeasible") {
        CHECK_THROWS_AS(dispatch(44.7, gens, 0.25), DispatchInfeasibleError);
    }

    SUBCASE("demand below base minimum is curtailed") {
        const DispatchResult r = dispatch(2.0, gens, 0.25);
        CHECK(r.per_generator_p_kw[0] == doctest::Approx(5.0));
        CHECK(r.curtailed_kw == doctest::Approx(net_output(5.0, 0.0002) - 2.0));
    }
}

TEST_CASE("dispatch merit order with reserve") {
    const std::vector<GeneratorSpec> gens{base_unit(), reserve_unit()};
    const DispatchResult r = dispatch(60.0, gens, 0.25);

    CHECK(r.per_generator_p_kw[0] == doctest::Approx(45.0).epsilon(1e-10));
    const double reserve_net_needed = 60.0 - net_output(45.0, 0.0002);
    CHECK(reserve_net_needed == doctest::Approx(15.405).epsilon(1e-9));

    const double oracle = brute_force_gross(reserve_net_needed, 0.0002, 100.0);
    CHECK(std::abs(r.per_generator_p_kw[1] - oracle) < 2e-4);
    CHECK(r.reserve_energy_kwh == doctest::Approx(r.per_generator_p_kw[1] * 0.25));
    CHECK(std::abs(total_net(r, gens) - 60.0) < 1e-9);
}

TEST_CASE("dispatch conservation on random demands") {
    const std::vector<GeneratorSpec> gens{base_unit(), reserve_unit()};
    const double cap = net_output(45.0, 0.0002) + net_output(100.0, 0.0002);
    Rng rng(42);
    for (int i = 0; i < 200; ++i) {
        const double demand = rng.uniform(5.0, cap - 1e-6);
        const DispatchResult r = dispatch(demand, gens, 0.25);
        CHECK(std::abs(total_net(r, gens) - demand) < 1e-9);
    }
}

TEST_CASE("merit order is cost optimal under the default coefficients") {
    const std::vector<GeneratorSpec> gens{base_unit(), reserve_unit()};
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        const double demand = rng.uniform(46.0, 120.0); // both units online
        const DispatchResult r = dispatch(demand, gens, 0.25);
        const double cost = r.total_cost_rate;

        // Shift a sliver of net output from base to reserve; cost must rise.
        const double eps = rng.uniform(0.01, 0.5);
        const double base_net = net_output(r.per_generator_p_kw[0], gens[0].beta) - eps;
        const double reserve_net = demand - base_net;
        if (base_net < net_output(gens[0].p_min_kw, gens[0].beta)) continue;
        if (reserve_net > net_output(gens[1].p_max_kw, gens[1].beta)) continue;
        const double p0 = gross_for_net(base_net, gens[0].beta);
        const double p1 = gross_for_net(reserve_net, gens[1].beta);
        const double perturbed =
            generator_cost_rate(p0, gens[0]) + generator_cost_rate(p1, gens[1]);
        CHECK(perturbed >= cost - 1e-12);
    }
}

TEST_CASE("sell price schedule") {
    PriceSchedule s;
    s.sell_before_11am = 0.05;
    s.sell_after_11am = 0.095;
    s.buy_levels = {0.05, 0.06};
    s.conventional_buy = 0.06;

    CHECK(sell_price(43, s) == 0.05);
    CHECK(sell_price(44, s) == 0.095);
    CHECK_THROWS_AS(sell_price(-1, s), std::domain_error);
    CHECK_THROWS_AS(sell_price(96, s), std::domain_error);

    PriceSchedule flat = s;
    flat.sell_before_11am = flat.sell_after_11am = 0.07;
    CHECK(sell_price(0, flat) == 0.07);
}

TEST_CASE("price schedule validation") {
    PriceSchedule s;
    s.sell_before_11am = 0.05;
    s.sell_after_11am = 0.095;
    s.conventional_buy = 0.06;
    s.buy_levels = {0.05, 0.06, 0.07};
    CHECK_NOTHROW(s.validate());

    s.buy_levels = {};
    CHECK_THROWS_AS(s.validate(), std::domain_error);
    s.buy_levels = {0.06, 0.05};
    CHECK_THROWS_AS(s.validate(), std::domain_error);
}

TEST_CASE("service provider slot reward") {
    SUBCASE("zero slot") {
        DispatchResult empty;
        CHECK(sp_slot_reward(0.0, {}, 0.06, empty, 0.05, 0.25) == 0.0);
    }

    SUBCASE("direct substitution") {
        DispatchResult d;
        d.total_cost_rate = 2.0;
        const std::vector<double> injections{2.0};
        const double r = sp_slot_reward(50.0, injections, 0.1, d, 0.095, 0.25);
        CHECK(r == doctest::Approx(0.6375).epsilon(1e-12));
    }

    SUBCASE("negative injections do not pay the buy price") {
        DispatchResult d;
        d.total_cost_rate = 1.0;
        const std::vector<double> injections{-3.0, 2.0};
        const double r = sp_slot_reward(20.0, injections, 0.08, d, 0.05, 0.25);
        CHECK(r == doctest::Approx(20.0 * 0.05 * 0.25 - 0.25 - 2.0 * 0.08 * 0.25));
    }
}
