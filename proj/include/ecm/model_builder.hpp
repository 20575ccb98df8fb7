#pragma once

#include "ecm/ec_config.hpp"
#include "ecm/milp_model.hpp"
#include "ecm/scenario_tree.hpp"

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace ecm {

/// Model symbol names as they appear in the registry.
namespace sym {
inline constexpr const char* f = "f";
inline constexpr const char* f_pos = "f+";
inline constexpr const char* f_neg = "f-";
inline constexpr const char* charge = "c";
inline constexpr const char* discharge = "d";
inline constexpr const char* is_discharging = "id";
inline constexpr const char* soc = "soc";
inline constexpr const char* da_sell = "eDA+";
inline constexpr const char* da_buy = "eDA-";
inline constexpr const char* da_sell_on = "ieDA+";
inline constexpr const char* da_buy_on = "ieDA-";
inline constexpr const char* res_up = "rU";
inline constexpr const char* res_down = "rD";
inline constexpr const char* res_up_bess = "rU,B";
inline constexpr const char* res_down_bess = "rD,B";
inline constexpr const char* res_up_fd = "rU,FD";
inline constexpr const char* res_down_fd = "rD,FD";
inline constexpr const char* intraday = "eIM";
inline constexpr const char* ib_pos = "eIB+";
inline constexpr const char* ib_neg = "eIB-";
} // namespace sym

/// Everything a constraint family needs. `config` must be resolved against
/// `demand` (see EcConfig::resolved).
struct ModelContext {
    const ScenarioTree& tree;
    const EcConfig& config;
    const DemandProfile& demand;

    const StageSchedule& schedule() const { return tree.schedule(); }
    int hours() const { return tree.schedule().hours; }
    int scenarios() const { return tree.scenario_count(); }
};

/// Declares every column with its bounds and kind, in registry order
/// (symbol-major, then hour, then scenario).
void declare_variables(MilpModel& model, const ModelContext& ctx);

// Constraint families. Each expects `declare_variables` to have run and
// returns the ids of the rows it added.
std::vector<int> add_flexible_demand(MilpModel& model, const ModelContext& ctx);
std::vector<int> add_bess(MilpModel& model, const ModelContext& ctx);
std::vector<int> add_day_ahead(MilpModel& model, const ModelContext& ctx);
std::vector<int> add_reserve(MilpModel& model, const ModelContext& ctx);
std::vector<int> add_intraday(MilpModel& model, const ModelContext& ctx);
std::vector<int> add_imbalance(MilpModel& model, const ModelContext& ctx);
std::vector<int> add_nonanticipativity(MilpModel& model, const ModelContext& ctx);

/// Expected community welfare (maximized).
void build_objective(MilpModel& model, const ModelContext& ctx);

/// Full model: variables, every family and the objective. Validates the
/// inputs first and throws std::invalid_argument listing the problems.
MilpModel build_model(const ScenarioTree& tree, const EcConfig& config, const DemandProfile& demand);

/// Stage whose clusters govern a variable's nonanticipativity, or -1 if the
/// symbol has no such constraint.
int nac_stage(const StageSchedule& schedule, const std::string& symbol, int hour, int market);

/// Diagnostic relaxation: every non-NAC row gets nonnegative slack columns
/// penalised by `penalty` per unit in the objective.
void add_elastic_slacks(MilpModel& model, double penalty);

/// Total slack per constraint family in an elastic model's solution.
std::map<std::string, double> elastic_usage(const MilpModel& model, const std::vector<double>& values);

/// `{"variables": {"eDA+[t1][w0]": "C0000000", ...}, "families": {...}}`
nlohmann::json registry_to_json(const MilpModel& model);

} // namespace ecm
