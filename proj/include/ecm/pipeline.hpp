#pragma once

#include "ecm/bids.hpp"
#include "ecm/ec_config.hpp"
#include "ecm/history.hpp"
#include "ecm/solver.hpp"
#include "ecm/tree_reduction.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ecm {

enum class SolverMode { Auto, External, Reference };

struct SolverSettings {
    SolverMode mode = SolverMode::Auto;
    std::string command;               // template with {mps} {sol} {time_limit}
    SolutionFormat format = SolutionFormat::HighsRaw;
    double time_limit = 600.0;
    double kill_after = 60.0;
    double elastic_penalty = 0.0;      // > 0: diagnose infeasible days with elastic slacks
};

/// Reduced problem used when no external solver is available.
struct ReferencePreset {
    int hours = 3;
    std::vector<int> children{3};
};

struct RunConfig {
    EcConfig assets;
    DemandProfile demand;
    std::filesystem::path price_file, renewable_file;
    int fan_size = 200;
    std::uint64_t seed = 1;
    std::vector<int> reduction_children;   // per market stage
    std::optional<SeriesWeights> weights;  // empty: standardizing weights per day
    SolverSettings solver;
    int horizon_hours = 24;
    ReferencePreset reference;
    std::vector<Date> days;
    int workers = 1;
};

/// Parses the run configuration. Relative paths are resolved against
/// `base_dir`, and "{config_dir}" in the solver command expands to it.
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Per-day seed derived from the run seed and the date.
std::uint64_t day_seed(std::uint64_t seed, const Date& day);

/// What a day is solved with after resolving `auto`.
struct SolvePlan {
    bool external = false;
    StageSchedule schedule;
    DemandProfile demand;
    EcConfig assets;
    ReductionPlan reduction;
    bool standardize_weights = true;   // weights recomputed from each day's fan
    std::string note;
};

/// Probes the external solver in auto mode and sets up the horizon and tree
/// size accordingly (the reference preset without an external solver).
SolvePlan plan_solve(const RunConfig& cfg);

ScenarioFan day_fan(const RunConfig& cfg, const SolvePlan& plan, const HistoricalWindow& history, const Date& day);
ScenarioTree day_tree(const SolvePlan& plan, const ScenarioFan& fan);
Solution solve_model(const MilpModel& model, const RunConfig& cfg, const SolvePlan& plan,
                     const std::filesystem::path& work_dir);

nlohmann::json solution_to_json(const MilpModel& model, const Solution& sol);
Solution solution_from_json(const nlohmann::json& doc, const MilpModel& model);

struct DayResult {
    Date date;
    bool ok = false;
    std::string error;
    std::string solver;
    int scenarios = 0;
    std::string status;
    Decomposition decomposition;
    double max_residual = 0.0;
    double solve_seconds = 0.0;
};

/// Writes every report of a solved day into `dir` and returns the
/// decomposition. Throws if the solution fails the residual or NAC checks.
Decomposition write_day_reports(const std::filesystem::path& dir, const MilpModel& model, const Solution& sol,
                                const ScenarioTree& tree, const DemandProfile& demand, double* max_residual = nullptr);

struct PipelineResult {
    std::vector<DayResult> days;
    SolvePlan plan;
    bool ok() const;
};

/// Runs every configured day (concurrently up to `workers`), writing one
/// directory per day plus summary.csv and run.json into `out_dir`.
PipelineResult run_pipeline(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& progress);

void write_summary_csv(std::ostream& out, const std::vector<DayResult>& days);

} // namespace ecm
