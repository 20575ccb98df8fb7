#pragma once

#include "ecm/ec_config.hpp"
#include "ecm/schedule.hpp"

#include <string>
#include <vector>

namespace ecm {

/// Realisation of every random quantity of one day in one scenario.
/// Hourly vectors have one entry per schedule hour; `im_price[m]` is
/// aligned to `schedule.markets[m].periods`.
struct ScenarioData {
    std::vector<double> da_price;      // EUR/MWh
    std::vector<double> rm_price;      // EUR/MW
    std::vector<std::vector<double>> im_price;  // EUR/MWh
    std::vector<double> wind;          // MWh
    std::vector<double> pv;            // MWh
    std::vector<double> ib_pos_price;  // EUR/MWh
    std::vector<double> ib_neg_price;  // EUR/MWh

    bool operator==(const ScenarioData&) const = default;
};

/// Empty scenario with every vector sized for `schedule`, all zeros.
ScenarioData make_scenario_data(const StageSchedule& schedule);

enum class Series { DayAhead, Reserve, Intraday, Wind, Pv, ImbalancePos, ImbalanceNeg };
constexpr int kSeriesCount = 7;
const char* series_name(Series s);

/// One scalar observation, tagged with the stage that reveals it.
struct Observation {
    int stage;
    Series series;
    double value;
};

/// Observations of `data` ordered by stage (stable within a stage).
std::vector<Observation> observations(const StageSchedule& schedule, const ScenarioData& data);

/// Number of entries of `observations(...)` revealed at stages <= s, for
/// every s in 0..last_stage.
std::vector<std::size_t> observation_prefix(const StageSchedule& schedule);

struct TreeNode {
    int id = 0;
    int stage = 0;
    int parent = -1;
    double cond_prob = 1.0;   // probability conditional on the parent
};

/// A set of scenarios indistinguishable up to some stage.
struct Cluster {
    int node = -1;
    std::vector<int> scenarios;   // ascending
};

/// Rooted, staged scenario tree with one leaf per scenario.
///
/// The constructor only checks what is needed to index the tree (node ids,
/// parent links, leaf ids, sizes). Everything else (probabilities, stage
/// depths, shared histories, data bounds) is reported by `validate_tree`.
class ScenarioTree {
public:
    ScenarioTree(StageSchedule schedule, std::vector<TreeNode> nodes, std::vector<int> leaves,
                 std::vector<double> probabilities, std::vector<ScenarioData> data);

    /// Builds the tree whose stage-s nodes are the distinct prefixes
    /// (keys[w][0..s]) of the per-scenario key sequences. Node conditional
    /// probabilities are derived from the scenario probabilities.
    static ScenarioTree from_stage_keys(StageSchedule schedule, const std::vector<std::vector<int>>& keys,
                                        std::vector<double> probabilities, std::vector<ScenarioData> data);

    /// Every scenario branches at stage 1.
    static ScenarioTree fan(StageSchedule schedule, std::vector<double> probabilities,
                            std::vector<ScenarioData> data);

    const StageSchedule& schedule() const { return schedule_; }
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const std::vector<int>& leaves() const { return leaves_; }
    const std::vector<double>& probabilities() const { return probs_; }
    const std::vector<ScenarioData>& data() const { return data_; }

    int scenario_count() const { return static_cast<int>(probs_.size()); }
    double probability(int w) const { return probs_.at(w); }
    const ScenarioData& scenario(int w) const { return data_.at(w); }

    /// Node of scenario `w` at `stage`, or -1 when the path has no node there.
    int node_at(int w, int stage) const;

private:
    StageSchedule schedule_;
    std::vector<TreeNode> nodes_;
    std::vector<int> leaves_;
    std::vector<double> probs_;
    std::vector<ScenarioData> data_;
    std::vector<std::vector<int>> path_;   // path_[w][stage]
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks every tree invariant. Nothing is thrown; all problems are listed.
ValidationReport validate_tree(const ScenarioTree& tree, const EcConfig* config = nullptr);

/// Partition of the scenarios by their node at `stage` (1..last stage),
/// ordered by lowest member.
std::vector<Cluster> clusters_at(const ScenarioTree& tree, int stage);

/// Scenarios sorted by day-ahead price at `hour`; ties by scenario index.
std::vector<int> da_price_order(const ScenarioTree& tree, int hour);

} // namespace ecm
