#pragma once

#include "ecm/history.hpp"
#include "ecm/scenario_tree.hpp"

#include <array>
#include <string>
#include <vector>

namespace ecm {

/// Per-series weights of the squared differences in the scenario distance.
struct SeriesWeights {
    std::array<double, kSeriesCount> value{1, 1, 1, 1, 1, 1, 1};

    double operator[](Series s) const { return value[static_cast<std::size_t>(s)]; }
    double& operator[](Series s) { return value[static_cast<std::size_t>(s)]; }
};

/// Weights 1/sigma^2 of each series pooled over all scenarios and hours, so
/// that prices and energies contribute on a common scale. Series without
/// spread get weight 1.
SeriesWeights standardizing_weights(const std::vector<ScenarioData>& scenarios, const StageSchedule& schedule);

/// Where the reduced tree branches and into how many children.
struct ReductionPlan {
    struct Branching {
        int stage = 1;
        int children = 1;
    };
    std::vector<Branching> branches;   // strictly increasing stages
    SeriesWeights weights;

    /// Branching at stages 1, 2 and every intraday market stage, with the
    /// given child counts (missing entries default to 1).
    static ReductionPlan market_stages(const StageSchedule& schedule, const std::vector<int>& children);

    /// Upper bound on the number of leaves (product of the counts).
    long long max_leaves() const;

    std::vector<std::string> check(int fan_size, const StageSchedule& schedule) const;
};

/// Weighted Euclidean distance over the observations revealed at stages
/// <= `upto_stage`: sqrt(sum_k w_k (a_k - b_k)^2).
double scenario_distance(const StageSchedule& schedule, const ScenarioData& a, const ScenarioData& b, int upto_stage,
                         const SeriesWeights& weights);

struct Selection {
    std::vector<int> kept;                 // in selection order
    std::vector<double> probabilities;     // aligned with `kept`, after redistribution
    std::vector<int> assignment;           // nearest kept scenario for every fan scenario
    std::vector<double> residual_cost;     // selection objective after each pick
};

/// Greedy forward selection of `k` scenarios minimizing the probability
/// weighted distance of the others to the kept set; the probability of every
/// dropped scenario moves to its nearest kept one (ties to the lowest index).
Selection forward_select(const ScenarioFan& fan, int k, int upto_stage, const SeriesWeights& weights);

/// Same on an explicit distance matrix (row-major n x n) and probabilities.
Selection forward_select(const std::vector<double>& distance, const std::vector<double>& probabilities, int k);

/// Recursive forward selection following `plan`. Every leaf of the result
/// stands for a group of fan scenarios and carries their total probability;
/// between two branching stages a node carries the observations of the
/// representative chosen for it.
ScenarioTree build_tree(const ScenarioFan& fan, const ReductionPlan& plan);

} // namespace ecm
