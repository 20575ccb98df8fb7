#include "ecm/scenario_tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

namespace ecm {

namespace {

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace

ScenarioData make_scenario_data(const StageSchedule& schedule)
{
    ScenarioData d;
    const auto h = static_cast<std::size_t>(schedule.hours);
    d.da_price.assign(h, 0.0);
    d.rm_price.assign(h, 0.0);
    d.wind.assign(h, 0.0);
    d.pv.assign(h, 0.0);
    d.ib_pos_price.assign(h, 0.0);
    d.ib_neg_price.assign(h, 0.0);
    for (const auto& m : schedule.markets)
        d.im_price.emplace_back(m.periods.size(), 0.0);
    return d;
}

const char* series_name(Series s)
{
    switch (s) {
    case Series::DayAhead: return "da";
    case Series::Reserve: return "rm";
    case Series::Intraday: return "im";
    case Series::Wind: return "wind";
    case Series::Pv: return "pv";
    case Series::ImbalancePos: return "ib_pos";
    case Series::ImbalanceNeg: return "ib_neg";
    }
    return "?";
}

std::vector<Observation> observations(const StageSchedule& schedule, const ScenarioData& data)
{
    std::vector<Observation> out;
    out.reserve(static_cast<std::size_t>(schedule.hours) * 6 + 128);
    for (int stage = 1; stage <= schedule.last_stage(); ++stage) {
        if (stage == schedule.da_stage) {
            for (double v : data.da_price)
                out.push_back({stage, Series::DayAhead, v});
        } else if (stage == schedule.rm_stage) {
            for (double v : data.rm_price)
                out.push_back({stage, Series::Reserve, v});
        } else if (int m = schedule.market_at_stage(stage); m >= 0) {
            for (double v : data.im_price.at(m))
                out.push_back({stage, Series::Intraday, v});
        } else if (int h = schedule.hour_at_stage(stage); h >= 0) {
            out.push_back({stage, Series::Wind, data.wind.at(h)});
            out.push_back({stage, Series::Pv, data.pv.at(h)});
            out.push_back({stage, Series::ImbalancePos, data.ib_pos_price.at(h)});
            out.push_back({stage, Series::ImbalanceNeg, data.ib_neg_price.at(h)});
        }
    }
    return out;
}

std::vector<std::size_t> observation_prefix(const StageSchedule& schedule)
{
    std::vector<std::size_t> prefix(static_cast<std::size_t>(schedule.total_stages()), 0);
    std::size_t count = 0;
    for (int stage = 1; stage <= schedule.last_stage(); ++stage) {
        if (stage == schedule.da_stage || stage == schedule.rm_stage)
            count += static_cast<std::size_t>(schedule.hours);
        else if (int m = schedule.market_at_stage(stage); m >= 0)
            count += schedule.markets[m].periods.size();
        else if (schedule.hour_at_stage(stage) >= 0)
            count += 4;
        prefix[stage] = count;
    }
    return prefix;
}

ScenarioTree::ScenarioTree(StageSchedule schedule, std::vector<TreeNode> nodes, std::vector<int> leaves,
                           std::vector<double> probabilities, std::vector<ScenarioData> data)
    : schedule_(std::move(schedule)), nodes_(std::move(nodes)), leaves_(std::move(leaves)),
      probs_(std::move(probabilities)), data_(std::move(data))
{
    const int n = static_cast<int>(nodes_.size());
    if (n == 0)
        throw std::invalid_argument("scenario tree has no nodes");
    for (int i = 0; i < n; ++i) {
        if (nodes_[i].id != i)
            throw std::invalid_argument("node ids must be 0..n-1 in order");
        if (nodes_[i].parent < -1 || nodes_[i].parent >= n || nodes_[i].parent == i)
            throw std::invalid_argument("node " + std::to_string(i) + " has an invalid parent");
    }
    if (leaves_.size() != probs_.size() || leaves_.size() != data_.size())
        throw std::invalid_argument("leaves, probabilities and data must have one entry per scenario");
    if (leaves_.empty())
        throw std::invalid_argument("scenario tree has no scenarios");

    const int stages = schedule_.total_stages();
    path_.assign(leaves_.size(), std::vector<int>(static_cast<std::size_t>(stages), -1));
    for (std::size_t w = 0; w < leaves_.size(); ++w) {
        int node = leaves_[w];
        if (node < 0 || node >= n)
            throw std::invalid_argument("scenario " + std::to_string(w) + " has an invalid leaf");
        for (int steps = 0; node >= 0; ++steps) {
            if (steps > n)
                throw std::invalid_argument("cycle in scenario tree parent links");
            const int s = nodes_[node].stage;
            if (s >= 0 && s < stages && path_[w][s] < 0)
                path_[w][s] = node;
            node = nodes_[node].parent;
        }
    }
}

ScenarioTree ScenarioTree::from_stage_keys(StageSchedule schedule, const std::vector<std::vector<int>>& keys,
                                           std::vector<double> probabilities, std::vector<ScenarioData> data)
{
    const int stages = schedule.total_stages();
    const std::size_t scen = probabilities.size();
    if (keys.size() != scen)
        throw std::invalid_argument("one key sequence per scenario required");
    for (const auto& k : keys)
        if (static_cast<int>(k.size()) < stages)
            throw std::invalid_argument("key sequence shorter than the number of stages");

    std::vector<TreeNode> nodes{{0, 0, -1, 1.0}};
    std::vector<double> mass{std::accumulate(probabilities.begin(), probabilities.end(), 0.0)};
    std::vector<int> current(scen, 0);
    for (int s = 1; s < stages; ++s) {
        std::map<std::pair<int, int>, int> index;
        for (std::size_t w = 0; w < scen; ++w) {
            auto key = std::make_pair(current[w], keys[w][s]);
            auto it = index.find(key);
            if (it == index.end()) {
                const int id = static_cast<int>(nodes.size());
                nodes.push_back({id, s, current[w], 0.0});
                mass.push_back(0.0);
                it = index.emplace(key, id).first;
            }
            mass[it->second] += probabilities[w];
            current[w] = it->second;
        }
    }
    for (auto& node : nodes)
        if (node.parent >= 0) {
            const double pm = mass[node.parent];
            node.cond_prob = pm > 0.0 ? mass[node.id] / pm : 0.0;
        }
    return ScenarioTree(std::move(schedule), std::move(nodes), current, std::move(probabilities), std::move(data));
}

ScenarioTree ScenarioTree::fan(StageSchedule schedule, std::vector<double> probabilities,
                               std::vector<ScenarioData> data)
{
    const int stages = schedule.total_stages();
    std::vector<std::vector<int>> keys(probabilities.size());
    for (std::size_t w = 0; w < keys.size(); ++w) {
        keys[w].assign(static_cast<std::size_t>(stages), static_cast<int>(w));
        keys[w][0] = 0;
    }
    return from_stage_keys(std::move(schedule), keys, std::move(probabilities), std::move(data));
}

int ScenarioTree::node_at(int w, int stage) const
{
    const auto& p = path_.at(static_cast<std::size_t>(w));
    if (stage < 0 || stage >= static_cast<int>(p.size()))
        return -1;
    return p[static_cast<std::size_t>(stage)];
}

ValidationReport validate_tree(const ScenarioTree& tree, const EcConfig* config)
{
    ValidationReport rep;
    auto& v = rep.violations;
    const auto& sch = tree.schedule();
    for (auto& p : sch.check())
        v.push_back("schedule: " + p);

    const auto& nodes = tree.nodes();
    const int last = sch.last_stage();
    int roots = 0;
    std::vector<int> child_count(nodes.size(), 0);
    std::vector<double> child_prob(nodes.size(), 0.0);
    for (const auto& n : nodes) {
        if (n.parent < 0) {
            ++roots;
            if (n.stage != 0)
                v.push_back("root node " + std::to_string(n.id) + " is not at stage 0");
            continue;
        }
        if (n.stage != nodes[n.parent].stage + 1)
            v.push_back("node " + std::to_string(n.id) + " is not one stage below its parent");
        if (!(n.cond_prob >= 0.0))
            v.push_back("node " + std::to_string(n.id) + " has a negative conditional probability");
        ++child_count[n.parent];
        child_prob[n.parent] += n.cond_prob;
    }
    if (roots != 1)
        v.push_back("tree has " + std::to_string(roots) + " roots");
    const bool structure_ok = v.empty();
    std::vector<bool> is_leaf(nodes.size(), false);
    for (int leaf : tree.leaves())
        is_leaf[leaf] = true;
    for (const auto& n : nodes) {
        if (child_count[n.id] > 0) {
            if (std::abs(child_prob[n.id] - 1.0) > 1e-12)
                v.push_back("children of node " + std::to_string(n.id) + " have probabilities summing to " +
                            fmt(child_prob[n.id]));
            if (is_leaf[n.id])
                v.push_back("scenario leaf " + std::to_string(n.id) + " has children");
        } else if (!is_leaf[n.id]) {
            v.push_back("terminal node " + std::to_string(n.id) + " carries no scenario");
        }
    }
    bool leaves_ok = true;
    for (std::size_t w = 0; w < tree.leaves().size(); ++w) {
        const auto& leaf = nodes[tree.leaves()[w]];
        leaves_ok = leaves_ok && leaf.stage == last;
        if (leaf.stage != last)
            v.push_back("scenario " + std::to_string(w) + " leaf is at stage " + std::to_string(leaf.stage) +
                        ", expected " + std::to_string(last));
    }
    std::vector<int> sorted_leaves = tree.leaves();
    std::sort(sorted_leaves.begin(), sorted_leaves.end());
    if (std::adjacent_find(sorted_leaves.begin(), sorted_leaves.end()) != sorted_leaves.end())
        v.push_back("two scenarios share a leaf");

    double total = 0.0;
    for (std::size_t w = 0; w < tree.probabilities().size(); ++w) {
        const double p = tree.probabilities()[w];
        total += p;
        if (!(p > 0.0))
            v.push_back("scenario " + std::to_string(w) + " has nonpositive probability");
        double along = 1.0;
        for (int node = tree.leaves()[w]; node >= 0; node = nodes[node].parent)
            along *= nodes[node].cond_prob;
        if (std::abs(along - p) > 1e-9 * std::max(1.0, p))
            v.push_back("scenario " + std::to_string(w) + " probability disagrees with its path");
    }
    if (std::abs(total - 1.0) > 1e-12)
        v.push_back("scenario probabilities sum to " + fmt(total));

    // Data shape and bounds.
    const auto h = static_cast<std::size_t>(sch.hours);
    bool shapes_ok = true;
    for (std::size_t w = 0; w < tree.data().size(); ++w) {
        const auto& d = tree.data()[w];
        const std::string who = "scenario " + std::to_string(w);
        bool ok = d.da_price.size() == h && d.rm_price.size() == h && d.wind.size() == h && d.pv.size() == h &&
                  d.ib_pos_price.size() == h && d.ib_neg_price.size() == h && d.im_price.size() == sch.markets.size();
        for (std::size_t m = 0; ok && m < sch.markets.size(); ++m)
            ok = d.im_price[m].size() == sch.markets[m].periods.size();
        if (!ok) {
            v.push_back(who + " data does not match the schedule");
            shapes_ok = false;
            continue;
        }
        for (const auto& o : observations(sch, d))
            if (!std::isfinite(o.value)) {
                v.push_back(who + " has a non-finite " + series_name(o.series) + " value");
                break;
            }
        for (std::size_t t = 0; t < h; ++t) {
            if (d.rm_price[t] < 0.0) {
                v.push_back(who + " has a negative reserve price at hour " + std::to_string(t + 1));
                break;
            }
        }
        if (config) {
            constexpr double eps = 1e-9;
            for (std::size_t t = 0; t < h; ++t) {
                if (d.wind[t] < -eps || d.wind[t] > config->wind_capacity + eps)
                    v.push_back(who + " wind outside [0, capacity] at hour " + std::to_string(t + 1));
                if (d.pv[t] < -eps || d.pv[t] > config->pv_capacity + eps)
                    v.push_back(who + " pv outside [0, capacity] at hour " + std::to_string(t + 1));
            }
        }
    }

    // Scenarios through the same stage-s node must agree on what stage s reveals.
    if (shapes_ok && structure_ok && leaves_ok) {
        std::vector<std::vector<Observation>> obs;
        for (const auto& d : tree.data())
            obs.push_back(observations(sch, d));
        const auto prefix = observation_prefix(sch);
        for (int s = 1; s <= last; ++s) {
            bool mismatch = false;
            for (const auto& c : clusters_at(tree, s)) {
                const auto& ref = obs[c.scenarios.front()];
                for (std::size_t k = 1; k < c.scenarios.size() && !mismatch; ++k) {
                    const auto& other = obs[c.scenarios[k]];
                    for (std::size_t i = prefix[s - 1]; i < prefix[s]; ++i)
                        if (other[i].value != ref[i].value) {
                            mismatch = true;
                            break;
                        }
                }
            }
            if (mismatch)
                v.push_back("shared-history mismatch at stage " + std::to_string(s));
        }
    }
    return rep;
}

std::vector<Cluster> clusters_at(const ScenarioTree& tree, int stage)
{
    if (stage < 1 || stage > tree.schedule().last_stage())
        throw std::out_of_range("stage " + std::to_string(stage) + " outside 1.." +
                                std::to_string(tree.schedule().last_stage()));
    std::vector<Cluster> out;
    std::map<int, std::size_t> by_node;
    for (int w = 0; w < tree.scenario_count(); ++w) {
        const int node = tree.node_at(w, stage);
        auto it = by_node.find(node);
        if (it == by_node.end()) {
            it = by_node.emplace(node, out.size()).first;
            out.push_back({node, {}});
        }
        out[it->second].scenarios.push_back(w);
    }
    return out;
}

std::vector<int> da_price_order(const ScenarioTree& tree, int hour)
{
    std::vector<int> order(static_cast<std::size_t>(tree.scenario_count()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return tree.scenario(a).da_price.at(hour) < tree.scenario(b).da_price.at(hour);
    });
    return order;
}

} // namespace ecm
