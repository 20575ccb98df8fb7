#pragma once

#include "ecm/ec_config.hpp"
#include "ecm/milp_model.hpp"
#include "ecm/scenario_tree.hpp"

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ecm {

/// A decision that should be common to a cluster differs between its
/// scenarios by more than the tolerance.
class NacViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BidPoint {
    double quantity = 0.0;   // MWh, negative = buy, positive = sell
    double price = 0.0;      // EUR/MWh
};

struct BidCurve {
    int hour = 0;
    std::vector<BidPoint> points;   // ascending price
};

/// Day-ahead curve for `hour`: one point per stage-1 cluster with
/// q = eDA+ - eDA-, merged on equal prices.
BidCurve extract_da_curve(const MilpModel& model, const std::vector<double>& values, const ScenarioTree& tree,
                          int hour, double tol = 1e-7);

struct CurveCheck {
    bool monotone = true;     // quantities non-decreasing in price
    int sign_changes = 0;     // strict sign changes, ignoring zeros
    bool buy_then_sell = false;

    bool ok() const { return monotone && sign_changes <= 1; }
};
CurveCheck check_curve(const BidCurve& curve, double tol = 1e-7);

/// Vertices of the step rendering: quantity q_j holds from p_j up to p_{j+1}.
std::vector<BidPoint> step_vertices(const BidCurve& curve);

enum class PriceAcceptingMarket { ReserveUp, ReserveDown, Intraday };

struct MarketRef {
    PriceAcceptingMarket kind = PriceAcceptingMarket::ReserveUp;
    int market = -1;   // index into schedule.markets for Intraday
};

std::string market_label(const StageSchedule& schedule, const MarketRef& ref);

/// Stage whose clusters carry the market's decisions.
int decision_stage(const StageSchedule& schedule, const MarketRef& ref);

/// Common quantity of the cluster's scenarios for `hour`. Throws
/// std::invalid_argument when the cluster is not at the market's decision
/// stage or the hour is not traded, NacViolation on disagreement.
double extract_price_accepting(const MilpModel& model, const std::vector<double>& values, const ScenarioTree& tree,
                               const MarketRef& market, const Cluster& cluster, int hour, double tol = 1e-7);

struct PriceAcceptingBid {
    std::string market;
    int hour = 0;
    int cluster = 0;      // position in clusters_at(decision stage)
    int node = 0;
    double probability = 0.0;
    double quantity = 0.0;
};

/// Every price-accepting bid of the solution: reserve up/down per stage-1
/// cluster and hour, intraday per market, decision cluster and traded hour.
std::vector<PriceAcceptingBid> price_accepting_bids(const MilpModel& model, const std::vector<double>& values,
                                                    const ScenarioTree& tree, double tol = 1e-7);

struct BehaviourRow {
    int hour = 0;
    double da_sell = 0, da_buy = 0;
    std::vector<double> im;   // per schedule market, 0 where not traded
    double im_total = 0;
    double ib_pos = 0, ib_neg = 0;
    double f = 0, f_pos = 0, f_neg = 0;
    double charge = 0, discharge = 0, soc = 0;
    double wind = 0, pv = 0;
    double r_up = 0, r_down = 0, r_up_bess = 0, r_down_bess = 0, r_up_fd = 0, r_down_fd = 0;
    double balance_residual = 0;   // of the imbalance definition
};

std::vector<BehaviourRow> behaviour_report(const MilpModel& model, const std::vector<double>& values,
                                           const ScenarioTree& tree, int scenario);

enum class PercentileSeries { Pv, Wind, FlexDemand, Soc };
const char* series_label(PercentileSeries s);

inline constexpr std::array<double, 5> kPercentiles{0.10, 0.25, 0.50, 0.75, 0.90};

struct PercentileBand {
    int hour = 0;
    double min = 0;
    std::array<double, 5> p{};   // at kPercentiles
    double max = 0;
};

/// Lower weighted empirical quantile: the smallest value whose cumulative
/// weight reaches q.
double weighted_quantile(const std::vector<double>& values, const std::vector<double>& weights, double q);

std::vector<PercentileBand> percentile_report(const MilpModel& model, const std::vector<double>& values,
                                              const ScenarioTree& tree, PercentileSeries series);

struct Decomposition {
    double eecsw = 0, da = 0, rm = 0, im = 0, ib_pos = 0, ib_neg = 0, fd = 0;
    double sum() const { return da + rm + im + ib_pos - ib_neg - fd; }
};

/// Objective terms evaluated from the solution; `eecsw` is the model
/// objective of the same values.
Decomposition eecsw_decomposition(const MilpModel& model, const std::vector<double>& values, const ScenarioTree& tree,
                                  const DemandProfile& demand);

// Writers (CSV with a header line, hours 1-based).
void write_curves_csv(std::ostream& out, const std::vector<BidCurve>& curves, bool steps);
void write_price_accepting_csv(std::ostream& out, const std::vector<PriceAcceptingBid>& bids);
void write_behaviour_csv(std::ostream& out, const StageSchedule& schedule, const std::vector<BehaviourRow>& rows);
void write_percentiles_csv(std::ostream& out,
                           const std::vector<std::pair<PercentileSeries, std::vector<PercentileBand>>>& bands);
nlohmann::json decomposition_to_json(const Decomposition& d);

} // namespace ecm
