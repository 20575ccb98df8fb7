#include "ecm/tree_reduction.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ecm {

SeriesWeights standardizing_weights(const std::vector<ScenarioData>& scenarios, const StageSchedule& schedule)
{
    std::array<double, kSeriesCount> sum{}, sum_sq{}, count{};
    for (const auto& s : scenarios)
        for (const auto& o : observations(schedule, s)) {
            const auto i = static_cast<std::size_t>(o.series);
            sum[i] += o.value;
            sum_sq[i] += o.value * o.value;
            count[i] += 1.0;
        }
    SeriesWeights w;
    for (std::size_t i = 0; i < w.value.size(); ++i) {
        if (count[i] < 2.0)
            continue;
        const double mean = sum[i] / count[i];
        const double var = sum_sq[i] / count[i] - mean * mean;
        w.value[i] = var > 1e-12 ? 1.0 / var : 1.0;
    }
    return w;
}

ReductionPlan ReductionPlan::market_stages(const StageSchedule& schedule, const std::vector<int>& children)
{
    ReductionPlan plan;
    std::vector<int> stages{schedule.da_stage, schedule.rm_stage};
    for (const auto& m : schedule.markets)
        stages.push_back(m.stage);
    for (std::size_t i = 0; i < stages.size(); ++i)
        plan.branches.push_back({stages[i], i < children.size() ? children[i] : 1});
    return plan;
}

long long ReductionPlan::max_leaves() const
{
    long long p = 1;
    for (const auto& b : branches)
        p *= b.children;
    return p;
}

std::vector<std::string> ReductionPlan::check(int fan_size, const StageSchedule& schedule) const
{
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < branches.size(); ++i) {
        const auto& b = branches[i];
        if (b.children < 1)
            problems.push_back("branch counts must be at least 1");
        if (b.stage < 1 || b.stage > schedule.last_stage())
            problems.push_back("branching stage " + std::to_string(b.stage) + " outside the schedule");
        if (i > 0 && b.stage <= branches[i - 1].stage)
            problems.push_back("branching stages must be strictly increasing");
    }
    for (double w : weights.value)
        if (!(w >= 0.0))
            problems.push_back("distance weights must be nonnegative");
    if (problems.empty() && max_leaves() > fan_size)
        problems.push_back("plan allows " + std::to_string(max_leaves()) + " leaves but the fan has only " +
                           std::to_string(fan_size) + " scenarios");
    return problems;
}

namespace {

double prefix_distance(const std::vector<Observation>& a, const std::vector<Observation>& b, std::size_t len,
                       const SeriesWeights& weights)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        const double diff = a[i].value - b[i].value;
        acc += weights[a[i].series] * diff * diff;
    }
    return std::sqrt(acc);
}

std::vector<double> distance_matrix(const std::vector<const std::vector<Observation>*>& obs, std::size_t len,
                                    const SeriesWeights& weights)
{
    const std::size_t n = obs.size();
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            d[i * n + j] = d[j * n + i] = prefix_distance(*obs[i], *obs[j], len, weights);
    return d;
}

} // namespace

double scenario_distance(const StageSchedule& schedule, const ScenarioData& a, const ScenarioData& b, int upto_stage,
                         const SeriesWeights& weights)
{
    const auto prefix = observation_prefix(schedule);
    upto_stage = std::clamp(upto_stage, 0, schedule.last_stage());
    return prefix_distance(observations(schedule, a), observations(schedule, b), prefix[upto_stage], weights);
}

Selection forward_select(const std::vector<double>& distance, const std::vector<double>& probabilities, int k)
{
    const int n = static_cast<int>(probabilities.size());
    if (n == 0 || k < 1 || k > n)
        throw std::invalid_argument("forward selection needs 1 <= k <= number of scenarios");
    if (distance.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("distance matrix size mismatch");
    auto dist = [&](int i, int j) { return distance[static_cast<std::size_t>(i) * n + j]; };

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> nearest(static_cast<std::size_t>(n), inf);
    std::vector<bool> kept(static_cast<std::size_t>(n), false);
    Selection sel;
    for (int round = 0; round < k; ++round) {
        int best = -1;
        double best_cost = inf;
        for (int u = 0; u < n; ++u) {
            if (kept[u])
                continue;
            double cost = 0.0;
            for (int j = 0; j < n; ++j)
                if (!kept[j] && j != u)
                    cost += probabilities[j] * std::min(nearest[j], dist(j, u));
            if (best < 0 || cost < best_cost) {
                best = u;
                best_cost = cost;
            }
        }
        kept[best] = true;
        sel.kept.push_back(best);
        sel.residual_cost.push_back(best_cost);
        for (int j = 0; j < n; ++j)
            nearest[j] = std::min(nearest[j], dist(j, best));
    }

    std::vector<int> kept_sorted = sel.kept;
    std::sort(kept_sorted.begin(), kept_sorted.end());
    sel.assignment.assign(static_cast<std::size_t>(n), -1);
    std::vector<double> mass(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        int target = j;
        if (!kept[j]) {
            double best = inf;
            for (int c : kept_sorted)
                if (dist(j, c) < best) {
                    best = dist(j, c);
                    target = c;
                }
        }
        sel.assignment[j] = target;
        mass[target] += probabilities[j];
    }
    for (int c : sel.kept)
        sel.probabilities.push_back(mass[c]);
    return sel;
}

Selection forward_select(const ScenarioFan& fan, int k, int upto_stage, const SeriesWeights& weights)
{
    const auto prefix = observation_prefix(fan.schedule);
    upto_stage = std::clamp(upto_stage, 0, fan.schedule.last_stage());
    std::vector<std::vector<Observation>> obs;
    for (const auto& s : fan.scenarios)
        obs.push_back(observations(fan.schedule, s));
    std::vector<const std::vector<Observation>*> ptrs;
    for (const auto& o : obs)
        ptrs.push_back(&o);
    return forward_select(distance_matrix(ptrs, prefix[upto_stage], weights), fan.probabilities, k);
}

namespace {

struct TreeBuilder {
    const ScenarioFan& fan;
    const ReductionPlan& plan;
    std::vector<std::vector<Observation>> obs;
    std::vector<std::size_t> prefix;
    int last_stage = 0;

    // Output: one entry per final group.
    std::vector<std::vector<int>> keys;
    std::vector<double> probs;
    std::vector<ScenarioData> data;
    int next_label = 0;

    // Stage-range representatives along the current recursion path.
    struct Span {
        int first_stage, end_stage, representative, label;
    };

    void recurse(const std::vector<int>& members, std::size_t level, std::vector<Span>& spans)
    {
        if (level == plan.branches.size()) {
            emit(members, spans);
            return;
        }
        const auto& br = plan.branches[level];
        const int end = level + 1 < plan.branches.size() ? plan.branches[level + 1].stage : last_stage + 1;

        std::vector<const std::vector<Observation>*> ptrs;
        std::vector<double> p;
        for (int m : members) {
            ptrs.push_back(&obs[m]);
            p.push_back(fan.probabilities[m]);
        }
        const int k = std::min<int>(br.children, static_cast<int>(members.size()));
        const Selection sel = forward_select(distance_matrix(ptrs, prefix[br.stage], plan.weights), p, k);

        std::vector<int> reps = sel.kept;
        std::sort(reps.begin(), reps.end());
        for (int rep : reps) {
            std::vector<int> child;
            for (std::size_t j = 0; j < members.size(); ++j)
                if (sel.assignment[j] == rep)
                    child.push_back(members[j]);
            assert(!child.empty());
            spans.push_back({br.stage, end, members[rep], next_label++});
            recurse(child, level + 1, spans);
            spans.pop_back();
        }
    }

    void emit(const std::vector<int>& members, const std::vector<Span>& spans)
    {
        double mass = 0.0;
        for (int m : members)
            mass += fan.probabilities[m];
        std::vector<int> key(static_cast<std::size_t>(last_stage + 1), -1);
        // Observations of each stage come from the representative whose span covers it.
        const std::vector<Observation>& fallback = obs[spans.empty() ? members.front() : spans.front().representative];
        std::vector<const std::vector<Observation>*> source(static_cast<std::size_t>(last_stage + 1), &fallback);
        for (const auto& sp : spans)
            for (int s = sp.first_stage; s < sp.end_stage; ++s) {
                key[s] = sp.label;
                source[s] = &obs[sp.representative];
            }
        key[0] = -1;

        ScenarioData d = fan.scenarios[spans.empty() ? members.front() : spans.back().representative];
        std::vector<double> values(obs.front().size());
        for (int s = 1; s <= last_stage; ++s)
            for (std::size_t i = prefix[s - 1]; i < prefix[s]; ++i)
                values[i] = (*source[s])[i].value;
        assign_observations(d, values);

        keys.push_back(std::move(key));
        probs.push_back(mass);
        data.push_back(std::move(d));
    }

    // Inverse of `observations` for one scenario.
    void assign_observations(ScenarioData& d, const std::vector<double>& values) const
    {
        const auto& sch = fan.schedule;
        std::size_t i = 0;
        for (int stage = 1; stage <= sch.last_stage(); ++stage) {
            if (stage == sch.da_stage) {
                for (auto& v : d.da_price)
                    v = values[i++];
            } else if (stage == sch.rm_stage) {
                for (auto& v : d.rm_price)
                    v = values[i++];
            } else if (int m = sch.market_at_stage(stage); m >= 0) {
                for (auto& v : d.im_price[m])
                    v = values[i++];
            } else if (int h = sch.hour_at_stage(stage); h >= 0) {
                d.wind[h] = values[i++];
                d.pv[h] = values[i++];
                d.ib_pos_price[h] = values[i++];
                d.ib_neg_price[h] = values[i++];
            }
        }
    }
};

} // namespace

ScenarioTree build_tree(const ScenarioFan& fan, const ReductionPlan& plan)
{
    if (fan.size() < 1)
        throw std::invalid_argument("cannot reduce an empty fan");
    if (auto problems = plan.check(fan.size(), fan.schedule); !problems.empty())
        throw std::invalid_argument("infeasible reduction plan: " + problems.front());

    TreeBuilder b{fan, plan, {}, observation_prefix(fan.schedule), fan.schedule.last_stage(), {}, {}, {}, 0};
    for (const auto& s : fan.scenarios)
        b.obs.push_back(observations(fan.schedule, s));

    std::vector<int> all(static_cast<std::size_t>(fan.size()));
    std::iota(all.begin(), all.end(), 0);
    std::vector<TreeBuilder::Span> spans;
    // Stages before the first branching are common to every scenario.
    const int first_branch = plan.branches.empty() ? b.last_stage + 1 : plan.branches.front().stage;
    if (first_branch > 1) {
        std::vector<const std::vector<Observation>*> ptrs;
        for (const auto& o : b.obs)
            ptrs.push_back(&o);
        const auto sel = forward_select(distance_matrix(ptrs, b.prefix[first_branch - 1], plan.weights),
                                        fan.probabilities, 1);
        spans.push_back({1, first_branch, sel.kept.front(), b.next_label++});
    }
    b.recurse(all, 0, spans);

    // Merged probabilities renormalized against round-off in the sums.
    const double total = std::accumulate(b.probs.begin(), b.probs.end(), 0.0);
    for (auto& p : b.probs)
        p /= total;
    return ScenarioTree::from_stage_keys(fan.schedule, b.keys, std::move(b.probs), std::move(b.data));
}

} // namespace ecm
