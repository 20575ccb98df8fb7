#pragma once

// Instance generators shared by the unit and acceptance tests.

#include "ecm/ec_config.hpp"
#include "ecm/milp_model.hpp"
#include "ecm/model_builder.hpp"
#include "ecm/scenario_tree.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace ecm::testing {

struct Instance {
    ScenarioTree tree;
    EcConfig config;
    DemandProfile demand;
};

inline DemandProfile flat_demand(int hours, double central, double band, double flex_cost)
{
    DemandProfile d;
    d.central.assign(hours, central);
    d.min.assign(hours, central - band);
    d.max.assign(hours, central + band);
    d.flex_cost = flex_cost;
    return d;
}

/// Stages at which a tiny tree may branch.
inline std::vector<int> branching_stages(const StageSchedule& s)
{
    std::vector<int> out{s.da_stage, s.rm_stage};
    for (const auto& m : s.markets)
        out.push_back(m.stage);
    for (int st : s.renewable_stage)
        out.push_back(st);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Random tree over `scenarios` scenarios and a truncated `hours` layout.
/// Groups split at random branching stages and every group is a singleton
/// by the last stage. Data is drawn per node, so shared histories match.
inline Instance random_instance(std::mt19937_64& rng, int hours, int scenarios)
{
    const auto sch = StageSchedule::truncated(hours);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto uni = [&](double a, double b) { return a + (b - a) * u(rng); };

    // Group label of every scenario at every stage.
    const int stages = sch.total_stages();
    std::vector<std::vector<int>> keys(scenarios, std::vector<int>(stages, 0));
    std::vector<int> group(scenarios, 0);
    int next = 1;
    const auto branching = branching_stages(sch);
    for (int s = 1; s < stages; ++s) {
        const bool can_branch = std::find(branching.begin(), branching.end(), s) != branching.end();
        if (can_branch && (u(rng) < 0.35 || s == sch.last_stage())) {
            // Split every group of size >= 2 at the last stage, one random group otherwise.
            std::vector<int> labels(group);
            std::sort(labels.begin(), labels.end());
            labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
            for (int g : labels) {
                std::vector<int> members;
                for (int w = 0; w < scenarios; ++w)
                    if (group[w] == g)
                        members.push_back(w);
                if (members.size() < 2 || (s != sch.last_stage() && u(rng) < 0.5))
                    continue;
                const int cut = 1 + static_cast<int>(u(rng) * (members.size() - 1));
                const int a = next++, b = next++;
                for (std::size_t k = 0; k < members.size(); ++k)
                    group[members[k]] = static_cast<int>(k) < cut ? a : b;
            }
            if (s == sch.last_stage())
                for (int w = 0; w < scenarios; ++w)
                    group[w] = next++;
        }
        for (int w = 0; w < scenarios; ++w)
            keys[w][s] = group[w];
    }

    std::vector<ScenarioData> data(scenarios, make_scenario_data(sch));
    const double base_da = uni(40, 120);
    std::vector<double> base_w(hours), base_pv(hours);
    for (int h = 0; h < hours; ++h) {
        base_w[h] = uni(2, 25);
        base_pv[h] = uni(0, 20);
    }
    for (int s = 1; s < stages; ++s) {
        std::vector<int> done;
        for (int w = 0; w < scenarios; ++w) {
            if (std::find(done.begin(), done.end(), keys[w][s]) != done.end())
                continue;
            done.push_back(keys[w][s]);
            ScenarioData& d = data[w];
            if (s == sch.da_stage)
                for (auto& p : d.da_price)
                    p = base_da + uni(-30, 30);
            else if (s == sch.rm_stage)
                for (auto& p : d.rm_price)
                    p = uni(2, 25);
            else if (int m = sch.market_at_stage(s); m >= 0)
                for (auto& p : d.im_price[m])
                    p = base_da + uni(-35, 35);
            else if (int h = sch.hour_at_stage(s); h >= 0) {
                d.wind[h] = std::max(0.0, base_w[h] + uni(-2.5, 2.5));
                d.pv[h] = std::max(0.0, base_pv[h] + uni(-2.5, 2.5));
                d.ib_pos_price[h] = uni(10, 90);
                d.ib_neg_price[h] = d.ib_pos_price[h] + uni(5, 60);
            }
            // Copy the stage's observations to the rest of the group.
            for (int v = w + 1; v < scenarios; ++v) {
                if (keys[v][s] != keys[w][s])
                    continue;
                ScenarioData& e = data[v];
                if (s == sch.da_stage)
                    e.da_price = d.da_price;
                else if (s == sch.rm_stage)
                    e.rm_price = d.rm_price;
                else if (int m = sch.market_at_stage(s); m >= 0)
                    e.im_price[m] = d.im_price[m];
                else if (int h = sch.hour_at_stage(s); h >= 0) {
                    e.wind[h] = d.wind[h];
                    e.pv[h] = d.pv[h];
                    e.ib_pos_price[h] = d.ib_pos_price[h];
                    e.ib_neg_price[h] = d.ib_neg_price[h];
                }
            }
        }
    }

    std::vector<double> probs(scenarios);
    double total = 0.0;
    for (auto& p : probs)
        total += (p = uni(0.5, 1.5));
    for (auto& p : probs)
        p /= total;

    DemandProfile demand;
    for (int h = 0; h < hours; ++h) {
        const double c = uni(4, 12);
        demand.central.push_back(c);
        demand.min.push_back(c * uni(0.5, 0.9));
        demand.max.push_back(c * uni(1.1, 1.5));
    }
    demand.flex_cost = uni(2, 15);
    if (hours >= 3)
        demand.intervals.push_back({0, 1, uni(0.8, 1.0)});

    EcConfig config;
    config.soc_init = config.soc_final = uni(0.3, 0.7);
    return {ScenarioTree::from_stage_keys(sch, keys, probs, std::move(data)), config, demand};
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("ecm-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Stage whose information a decision may use, written out from the stage
/// table rather than taken from the builder: day-ahead and reserve bids at
/// the day-ahead stage, intraday trades one stage before their market's
/// prices, operation one stage before the hour's renewables, imbalances at
/// the renewable stage itself. -1 for columns without such a rule.
inline int expected_nac_stage(const StageSchedule& s, const SymbolKey& key)
{
    static const std::vector<std::string> first{"eDA+", "eDA-", "ieDA+", "ieDA-", "rU", "rD", "rU,B", "rD,B",
                                                "rU,FD", "rD,FD"};
    static const std::vector<std::string> operation{"f", "f+", "f-", "c", "d", "id", "soc"};
    if (std::find(first.begin(), first.end(), key.symbol) != first.end())
        return s.da_stage;
    if (key.symbol == "eIM")
        return s.markets.at(key.market).stage - 1;
    if (std::find(operation.begin(), operation.end(), key.symbol) != operation.end())
        return s.renewable_stage.at(key.hour) - 1;
    if (key.symbol == "eIB+" || key.symbol == "eIB-")
        return s.renewable_stage.at(key.hour);
    return -1;
}

/// Largest disagreement of a decision inside a group of scenarios that
/// share their node at the decision's stage. Every model column is visited
/// and grouped by the tree's node_at, so nothing relies on the NAC rows.
struct NacAudit {
    double max_disagreement = 0.0;
    std::size_t checked_groups = 0;
    std::string worst;
};

inline NacAudit audit_nac(const MilpModel& model, const ScenarioTree& tree, const std::vector<double>& values)
{
    NacAudit a;
    const auto& s = tree.schedule();
    for (std::size_t j = 0; j < model.variable_count(); ++j) {
        const SymbolKey& key = model.key(static_cast<int>(j));
        if (key.scenario != 0)
            continue;   // visit each (symbol, hour, market) once, from scenario 0
        const int stage = expected_nac_stage(s, key);
        if (stage < 0)
            continue;
        std::map<int, std::vector<double>> groups;
        for (int w = 0; w < tree.scenario_count(); ++w) {
            SymbolKey k = key;
            k.scenario = w;
            groups[tree.node_at(w, stage)].push_back(values.at(model.id(k)));
        }
        for (const auto& [node, vals] : groups) {
            if (vals.size() < 2)
                continue;
            ++a.checked_groups;
            const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
            if (*hi - *lo > a.max_disagreement) {
                a.max_disagreement = *hi - *lo;
                a.worst = key.to_string() + " at stage " + std::to_string(stage);
            }
        }
    }
    return a;
}

/// External solver command configured at build time, if any.
inline std::optional<std::string> external_command()
{
#ifdef ECM_TEST_SOLVER_COMMAND
    return std::string(ECM_TEST_SOLVER_COMMAND);
#else
    return std::nullopt;
#endif
}

} // namespace ecm::testing
