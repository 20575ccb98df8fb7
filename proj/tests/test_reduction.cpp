#include "ecm/tree_reduction.hpp"

#include "support.hpp"

#include <doctest.h>

#include <numeric>

using namespace ecm;

namespace {

// Selection objective of a kept set: sum_i p_i min_{j in kept} d(i, j).
double selection_cost(const std::vector<double>& dist, const std::vector<double>& p, const std::vector<int>& kept)
{
    const std::size_t n = p.size();
    double cost = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = 1e300;
        for (int j : kept)
            best = std::min(best, dist[i * n + j]);
        cost += p[i] * best;
    }
    return cost;
}

std::vector<double> line_distances(const std::vector<double>& x)
{
    const std::size_t n = x.size();
    std::vector<double> d(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            d[i * n + j] = std::fabs(x[i] - x[j]);
    return d;
}

std::vector<int> sorted(std::vector<int> v)
{
    std::sort(v.begin(), v.end());
    return v;
}

ScenarioFan fan_of(const StageSchedule& s, const std::vector<ScenarioData>& data)
{
    ScenarioFan fan;
    fan.schedule = s;
    fan.scenarios = data;
    fan.probabilities.assign(data.size(), 1.0 / data.size());
    return fan;
}

ScenarioData constant_data(const StageSchedule& s, double da, double rm = 5, double wind = 3)
{
    ScenarioData d = make_scenario_data(s);
    std::fill(d.da_price.begin(), d.da_price.end(), da);
    std::fill(d.rm_price.begin(), d.rm_price.end(), rm);
    std::fill(d.wind.begin(), d.wind.end(), wind);
    return d;
}

} // namespace

TEST_CASE("scenario distance")
{
    const auto s = StageSchedule::truncated(3);
    SeriesWeights w;
    const ScenarioData a = constant_data(s, 50);
    CHECK(scenario_distance(s, a, a, s.last_stage(), w) == 0.0);

    // differs only in the hour-0 wind, revealed at stage 5
    ScenarioData b = a;
    b.wind[0] += 7;
    CHECK(scenario_distance(s, a, b, 4, w) == 0.0);
    CHECK(scenario_distance(s, a, b, 5, w) == doctest::Approx(7.0));

    ScenarioData c = a;
    c.da_price[1] += 3.0;
    CHECK(scenario_distance(s, a, c, 1, w) == doctest::Approx(3.0));
    w[Series::DayAhead] = 4.0;
    CHECK(scenario_distance(s, a, c, 1, w) == doctest::Approx(6.0));
}

TEST_CASE("forward selection on {0, 1, 10}")
{
    const auto d = line_distances({0, 1, 10});
    const std::vector<double> p(3, 1.0 / 3);

    // exhaustive costs of the single picks
    CHECK(selection_cost(d, p, {0}) == doctest::Approx(11.0 / 3));
    CHECK(selection_cost(d, p, {1}) == doctest::Approx(10.0 / 3));
    CHECK(selection_cost(d, p, {2}) == doctest::Approx(19.0 / 3));

    const auto one = forward_select(d, p, 1);
    CHECK(one.kept == std::vector<int>{1});
    CHECK(one.probabilities == std::vector<double>{1.0});
    CHECK(one.assignment == std::vector<int>{1, 1, 1});

    const auto two = forward_select(d, p, 2);
    REQUIRE(two.kept == std::vector<int>{1, 2});
    CHECK(two.probabilities[0] == doctest::Approx(2.0 / 3).epsilon(1e-15));
    CHECK(two.probabilities[1] == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(two.residual_cost.back() == doctest::Approx(1.0 / 3));

    const auto all = forward_select(d, p, 3);
    CHECK(sorted(all.kept) == std::vector<int>{0, 1, 2});
    for (std::size_t k = 0; k < all.kept.size(); ++k)
        CHECK(all.probabilities[k] == p[all.kept[k]]);
    CHECK(all.residual_cost.back() == 0.0);
}

TEST_CASE("forward selection picks greedily optimal scenarios")
{
    // Every greedy step must be the best single addition, checked by
    // enumerating all candidates with an independent cost function.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 100);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + trial % 7;
        std::vector<double> x(n), p(n);
        for (int i = 0; i < n; ++i) {
            x[i] = u(rng);
            p[i] = 0.1 + u(rng);
        }
        const double total = std::accumulate(p.begin(), p.end(), 0.0);
        for (double& v : p)
            v /= total;
        const auto d = line_distances(x);
        const int k = 1 + trial % n;
        const auto sel = forward_select(d, p, k);
        REQUIRE(static_cast<int>(sel.kept.size()) == k);
        std::vector<int> kept;
        for (int step = 0; step < k; ++step) {
            double best = 1e300;
            for (int c = 0; c < n; ++c) {
                if (std::find(kept.begin(), kept.end(), c) != kept.end())
                    continue;
                auto trial_set = kept;
                trial_set.push_back(c);
                best = std::min(best, selection_cost(d, p, trial_set));
            }
            kept.push_back(sel.kept[step]);
            CHECK(selection_cost(d, p, kept) == doctest::Approx(best).epsilon(1e-12));
            CHECK(sel.residual_cost[step] == doctest::Approx(best).epsilon(1e-12));
        }
        // redistribution: each kept scenario carries its own mass plus that of the
        // scenarios assigned to it
        for (std::size_t j = 0; j < sel.kept.size(); ++j) {
            double mass = 0;
            for (int i = 0; i < n; ++i)
                if (sel.assignment[i] == sel.kept[j])
                    mass += p[i];
            CHECK(sel.probabilities[j] == doctest::Approx(mass).epsilon(1e-12));
        }
    }
}

TEST_CASE("probability mass is conserved")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 1);
    const auto s = StageSchedule::truncated(4);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 5 + trial % 40;
        std::vector<ScenarioData> data;
        for (int i = 0; i < n; ++i) {
            ScenarioData d = make_scenario_data(s);
            for (auto* v : {&d.da_price, &d.rm_price, &d.wind, &d.pv, &d.ib_pos_price, &d.ib_neg_price})
                for (auto& x : *v)
                    x = 100 * u(rng);
            for (auto& m : d.im_price)
                for (auto& x : m)
                    x = 100 * u(rng);
            data.push_back(d);
        }
        ScenarioFan fan = fan_of(s, data);
        for (auto& p : fan.probabilities)
            p = 0.2 + u(rng);
        const double total = std::accumulate(fan.probabilities.begin(), fan.probabilities.end(), 0.0);
        for (auto& p : fan.probabilities)
            p /= total;

        const auto sel = forward_select(fan, 1 + trial % n, s.last_stage(), SeriesWeights{});
        CHECK(std::fabs(std::accumulate(sel.probabilities.begin(), sel.probabilities.end(), 0.0) - 1.0) <= 1e-12);

        const auto plan = ReductionPlan::market_stages(s, {1 + trial % 3, 1, 2, 1 + trial % 2});
        if (!plan.check(n, s).empty())
            continue;   // more leaves than scenarios
        const auto tree = build_tree(fan, plan);
        const auto& probs = tree.probabilities();
        CHECK(std::fabs(std::accumulate(probs.begin(), probs.end(), 0.0) - 1.0) <= 1e-12);
        CHECK(tree.scenario_count() <= plan.max_leaves());
        const auto report = validate_tree(tree);
        CHECK_MESSAGE(report.ok(), (report.ok() ? "" : report.violations.front()));
    }
}

TEST_CASE("build_tree")
{
    const auto s = StageSchedule::truncated(2);
    SUBCASE("all counts one gives the selection centroid")
    {
        const auto fan = fan_of(s, {constant_data(s, 0), constant_data(s, 1), constant_data(s, 10)});
        const auto tree = build_tree(fan, ReductionPlan::market_stages(s, {}));
        REQUIRE(tree.scenario_count() == 1);
        CHECK(tree.probability(0) == 1.0);
        CHECK(tree.scenario(0) == fan.scenarios[1]);
    }
    SUBCASE("fan size at stage 1 reproduces the fan")
    {
        std::vector<ScenarioData> data;
        for (int i = 0; i < 5; ++i)
            data.push_back(constant_data(s, 10 * i, i, 2 * i));
        const auto fan = fan_of(s, data);
        const auto tree = build_tree(fan, ReductionPlan::market_stages(s, {5}));
        REQUIRE(tree.scenario_count() == 5);
        for (int w = 0; w < 5; ++w) {
            const auto it = std::find(data.begin(), data.end(), tree.scenario(w));
            CHECK(it != data.end());
            CHECK(tree.probability(w) == doctest::Approx(0.2).epsilon(1e-15));
        }
        CHECK(clusters_at(tree, 1).size() == 5);
    }
    SUBCASE("well separated pairs become the stage-1 clusters")
    {
        // pairs {0, 2} and {1, 3}: intra-distance 0.1, inter-distance 100
        const auto fan = fan_of(s, {constant_data(s, 10.0), constant_data(s, 110.0), constant_data(s, 10.05),
                                    constant_data(s, 110.05)});
        const auto tree = build_tree(fan, ReductionPlan::market_stages(s, {2}));
        REQUIRE(tree.scenario_count() == 2);
        CHECK(tree.probability(0) == doctest::Approx(0.5));
        CHECK(tree.probability(1) == doctest::Approx(0.5));
        const double a = tree.scenario(0).da_price[0], b = tree.scenario(1).da_price[0];
        CHECK(std::min(a, b) < 11);
        CHECK(std::max(a, b) > 109);
    }
    SUBCASE("plans are checked against the fan")
    {
        const auto plan = ReductionPlan::market_stages(s, {4});
        CHECK_FALSE(plan.check(3, s).empty());
        CHECK(plan.check(4, s).empty());
        CHECK(ReductionPlan::market_stages(StageSchedule::standard(), {4, 1, 1, 2, 1, 1, 2, 1, 1}).max_leaves() == 16);
    }
}

TEST_CASE("standardizing weights")
{
    const auto s = StageSchedule::truncated(2);
    std::vector<ScenarioData> data{constant_data(s, 10, 5), constant_data(s, 30, 5)};
    const auto w = standardizing_weights(data, s);
    // DA values {10, 10, 30, 30}: variance 100
    CHECK(w[Series::DayAhead] == doctest::Approx(0.01));
    CHECK(w[Series::Reserve] == 1.0);   // no spread
}
