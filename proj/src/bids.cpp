#include "ecm/bids.hpp"

#include "ecm/model_builder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace ecm {

namespace {

double value_of(const MilpModel& model, const std::vector<double>& values, const char* symbol, int hour, int w,
                int market = -1)
{
    return values.at(static_cast<std::size_t>(model.id({symbol, hour, w, market})));
}

// Value common to the cluster, or NacViolation.
double common_value(const MilpModel& model, const std::vector<double>& values, const Cluster& cluster,
                    const char* symbol, int hour, int market, double tol)
{
    const double first = value_of(model, values, symbol, hour, cluster.scenarios.front(), market);
    for (int w : cluster.scenarios) {
        const double v = value_of(model, values, symbol, hour, w, market);
        if (std::fabs(v - first) > tol)
            throw NacViolation(SymbolKey{symbol, hour, w, market}.to_string() + " differs from scenario " +
                               std::to_string(cluster.scenarios.front()) + " by " + std::to_string(v - first));
    }
    return first;
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v == 0.0 ? 0.0 : v);
    return buf;
}

} // namespace

BidCurve extract_da_curve(const MilpModel& model, const std::vector<double>& values, const ScenarioTree& tree,
                          int hour, double tol)
{
    const auto& sch = tree.schedule();
    if (hour < 0 || hour >= sch.hours)
        throw std::out_of_range("hour outside the schedule");
    BidCurve curve{hour, {}};
    for (const auto& cl : clusters_at(tree, sch.da_stage)) {
        const double sell = common_value(model, values, cl, sym::da_sell, hour, -1, tol);
        const double buy = common_value(model, values, cl, sym::da_buy, hour, -1, tol);
        curve.points.push_back({sell - buy, tree.scenario(cl.scenarios.front()).da_price[hour]});
    }
    std::stable_sort(curve.points.begin(), curve.points.end(),
                     [](const BidPoint& a, const BidPoint& b) { return a.price < b.price; });
    std::vector<BidPoint> merged;
    for (const auto& p : curve.points) {
        if (!merged.empty() && merged.back().price == p.price) {
            if (std::fabs(merged.back().quantity - p.quantity) > tol)
                throw NacViolation("hour " + std::to_string(hour + 1) + ": different quantities at price " +
                                   num(p.price));
            continue;
        }
        merged.push_back(p);
    }
    curve.points = std::move(merged);
    return curve;
}

CurveCheck check_curve(const BidCurve& curve, double tol)
{
    CurveCheck c;
    int last_sign = 0;
    bool saw_buy = false;
    for (std::size_t k = 0; k < curve.points.size(); ++k) {
        const double q = curve.points[k].quantity;
        if (k > 0 && q < curve.points[k - 1].quantity - tol)
            c.monotone = false;
        const int sign = q > tol ? 1 : q < -tol ? -1 : 0;
        if (sign != 0) {
            if (last_sign != 0 && sign != last_sign)
                ++c.sign_changes;
            if (sign < 0)
                saw_buy = true;
            if (sign > 0 && saw_buy)
                c.buy_then_sell = true;
            last_sign = sign;
        }
    }
    return c;
}

std::vector<BidPoint> step_vertices(const BidCurve& curve)
{
    std::vector<BidPoint> out;
    for (std::size_t k = 0; k < curve.points.size(); ++k) {
        out.push_back(curve.points[k]);
        if (k + 1 < curve.points.size())
            out.push_back({curve.points[k].quantity, curve.points[k + 1].price});
    }
    return out;
}

std::string market_label(const StageSchedule& schedule, const MarketRef& ref)
{
    switch (ref.kind) {
    case PriceAcceptingMarket::ReserveUp: return "RM-up";
    case PriceAcceptingMarket::ReserveDown: return "RM-down";
    case PriceAcceptingMarket::Intraday: return "IM" + std::to_string(schedule.markets.at(ref.market).id);
    }
    return "?";
}

int decision_stage(const StageSchedule& schedule, const MarketRef& ref)
{
    if (ref.kind == PriceAcceptingMarket::Intraday)
        return schedule.markets.at(ref.market).stage - 1;
    return schedule.da_stage;
}

double extract_price_accepting(const MilpModel& model, const std::vector<double>& values, const ScenarioTree& tree,
                               const MarketRef& market, const Cluster& cluster, int hour, double tol)
{
    const auto& sch = tree.schedule();
    if (hour < 0 || hour >= sch.hours)
        throw std::invalid_argument("hour outside the schedule");
    if (cluster.scenarios.empty() || cluster.node < 0)
        throw std::invalid_argument("empty cluster");
    const int stage = decision_stage(sch, market);
    if (tree.nodes().at(cluster.node).stage != stage)
        throw std::invalid_argument(market_label(sch, market) + " decisions belong to stage " + std::to_string(stage) +
                                    " clusters, got a stage " + std::to_string(tree.nodes()[cluster.node].stage) +
                                    " cluster");
    for (int w : cluster.scenarios)
        if (tree.node_at(w, stage) != cluster.node)
            throw std::invalid_argument("cluster membership does not match the tree");
    switch (market.kind) {
    case PriceAcceptingMarket::ReserveUp: return common_value(model, values, cluster, sym::res_up, hour, -1, tol);
    case PriceAcceptingMarket::ReserveDown: return common_value(model, values, cluster, sym::res_down, hour, -1, tol);
    case PriceAcceptingMarket::Intraday:
        if (sch.period_offset(market.market, hour) < 0)
            throw std::invalid_argument("hour " + std::to_string(hour + 1) + " is not traded in " +
                                        market_label(sch, market));
        return common_value(model, values, cluster, sym::intraday, hour, market.market, tol);
    }
    return 0.0;
}

std::vector<PriceAcceptingBid> price_accepting_bids(const MilpModel& model, const std::vector<double>& values,
                                                    const ScenarioTree& tree, double tol)
{
    const auto& sch = tree.schedule();
    std::vector<MarketRef> markets{{PriceAcceptingMarket::ReserveUp, -1}, {PriceAcceptingMarket::ReserveDown, -1}};
    for (int m = 0; m < static_cast<int>(sch.markets.size()); ++m)
        markets.push_back({PriceAcceptingMarket::Intraday, m});
    std::vector<PriceAcceptingBid> out;
    for (const auto& ref : markets) {
        const auto clusters = clusters_at(tree, decision_stage(sch, ref));
        std::vector<int> hours;
        if (ref.kind == PriceAcceptingMarket::Intraday)
            hours = sch.markets[ref.market].periods;
        else
            for (int h = 0; h < sch.hours; ++h)
                hours.push_back(h);
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            double prob = 0.0;
            for (int w : clusters[c].scenarios)
                prob += tree.probability(w);
            for (int h : hours)
                out.push_back({market_label(sch, ref), h, static_cast<int>(c), clusters[c].node, prob,
                               extract_price_accepting(model, values, tree, ref, clusters[c], h, tol)});
        }
    }
    return out;
}

std::vector<BehaviourRow> behaviour_report(const MilpModel& model, const std::vector<double>& values,
                                           const ScenarioTree& tree, int w)
{
    if (w < 0 || w >= tree.scenario_count())
        throw std::out_of_range("scenario index out of range");
    const auto& sch = tree.schedule();
    const auto& data = tree.scenario(w);
    auto v = [&](const char* s, int h) { return value_of(model, values, s, h, w); };
    std::vector<BehaviourRow> rows;
    for (int h = 0; h < sch.hours; ++h) {
        BehaviourRow r;
        r.hour = h;
        r.da_sell = v(sym::da_sell, h);
        r.da_buy = v(sym::da_buy, h);
        r.im.assign(sch.markets.size(), 0.0);
        for (int m : sch.markets_at_hour(h)) {
            r.im[m] = value_of(model, values, sym::intraday, h, w, m);
            r.im_total += r.im[m];
        }
        r.ib_pos = v(sym::ib_pos, h);
        r.ib_neg = v(sym::ib_neg, h);
        r.f = v(sym::f, h);
        r.f_pos = v(sym::f_pos, h);
        r.f_neg = v(sym::f_neg, h);
        r.charge = v(sym::charge, h);
        r.discharge = v(sym::discharge, h);
        r.soc = v(sym::soc, h);
        r.wind = data.wind[h];
        r.pv = data.pv[h];
        r.r_up = v(sym::res_up, h);
        r.r_down = v(sym::res_down, h);
        r.r_up_bess = v(sym::res_up_bess, h);
        r.r_down_bess = v(sym::res_down_bess, h);
        r.r_up_fd = v(sym::res_up_fd, h);
        r.r_down_fd = v(sym::res_down_fd, h);
        const double net = r.da_buy + r.wind + r.pv + r.discharge - (r.da_sell + r.im_total + r.f + r.charge);
        r.balance_residual = (r.ib_pos - r.ib_neg) - net;
        rows.push_back(std::move(r));
    }
    return rows;
}

const char* series_label(PercentileSeries s)
{
    switch (s) {
    case PercentileSeries::Pv: return "pv";
    case PercentileSeries::Wind: return "wind";
    case PercentileSeries::FlexDemand: return "f";
    case PercentileSeries::Soc: return "soc";
    }
    return "?";
}

double weighted_quantile(const std::vector<double>& values, const std::vector<double>& weights, double q)
{
    if (values.empty() || values.size() != weights.size())
        throw std::invalid_argument("weighted quantile needs matching, nonempty inputs");
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double cum = 0.0;
    for (std::size_t i : idx) {
        cum += weights[i];
        if (cum >= q * total - 1e-12)
            return values[i];
    }
    return values[idx.back()];
}

std::vector<PercentileBand> percentile_report(const MilpModel& model, const std::vector<double>& values,
                                              const ScenarioTree& tree, PercentileSeries series)
{
    const auto& sch = tree.schedule();
    std::vector<PercentileBand> out;
    for (int h = 0; h < sch.hours; ++h) {
        std::vector<double> x, p;
        for (int w = 0; w < tree.scenario_count(); ++w) {
            p.push_back(tree.probability(w));
            switch (series) {
            case PercentileSeries::Pv: x.push_back(tree.scenario(w).pv[h]); break;
            case PercentileSeries::Wind: x.push_back(tree.scenario(w).wind[h]); break;
            case PercentileSeries::FlexDemand: x.push_back(value_of(model, values, sym::f, h, w)); break;
            case PercentileSeries::Soc: x.push_back(value_of(model, values, sym::soc, h, w)); break;
            }
        }
        PercentileBand b;
        b.hour = h;
        b.min = *std::min_element(x.begin(), x.end());
        b.max = *std::max_element(x.begin(), x.end());
        for (std::size_t k = 0; k < kPercentiles.size(); ++k)
            b.p[k] = weighted_quantile(x, p, kPercentiles[k]);
        out.push_back(b);
    }
    return out;
}

Decomposition eecsw_decomposition(const MilpModel& model, const std::vector<double>& values, const ScenarioTree& tree,
                                  const DemandProfile& demand)
{
    const auto& sch = tree.schedule();
    Decomposition d;
    for (int w = 0; w < tree.scenario_count(); ++w) {
        const double p = tree.probability(w);
        const auto& s = tree.scenario(w);
        auto v = [&](const char* sym, int h) { return value_of(model, values, sym, h, w); };
        for (int h = 0; h < sch.hours; ++h) {
            d.da += p * s.da_price[h] * (v(sym::da_sell, h) - v(sym::da_buy, h));
            d.rm += p * s.rm_price[h] * (v(sym::res_down, h) + v(sym::res_up, h));
            for (int m : sch.markets_at_hour(h))
                d.im += p * s.im_price[m][sch.period_offset(m, h)] * value_of(model, values, sym::intraday, h, w, m);
            d.ib_pos += p * s.ib_pos_price[h] * v(sym::ib_pos, h);
            d.ib_neg += p * s.ib_neg_price[h] * v(sym::ib_neg, h);
            d.fd += p * demand.flex_cost * (v(sym::f_pos, h) + v(sym::f_neg, h));
        }
    }
    d.eecsw = model.evaluate_objective(values);
    return d;
}

void write_curves_csv(std::ostream& out, const std::vector<BidCurve>& curves, bool steps)
{
    out << "hour,point,price,quantity\n";
    for (const auto& c : curves) {
        const auto pts = steps ? step_vertices(c) : c.points;
        for (std::size_t k = 0; k < pts.size(); ++k)
            out << c.hour + 1 << ',' << k << ',' << num(pts[k].price) << ',' << num(pts[k].quantity) << '\n';
    }
}

void write_price_accepting_csv(std::ostream& out, const std::vector<PriceAcceptingBid>& bids)
{
    out << "market,hour,cluster,node,probability,quantity\n";
    for (const auto& b : bids)
        out << b.market << ',' << b.hour + 1 << ',' << b.cluster << ',' << b.node << ',' << num(b.probability) << ','
            << num(b.quantity) << '\n';
}

void write_behaviour_csv(std::ostream& out, const StageSchedule& schedule, const std::vector<BehaviourRow>& rows)
{
    out << "hour,da_sell,da_buy";
    for (const auto& m : schedule.markets)
        out << ",im" << m.id;
    out << ",im_total,ib_pos,ib_neg,f,f_pos,f_neg,charge,discharge,soc,wind,pv,r_up,r_down,r_up_bess,r_down_bess,"
           "r_up_fd,r_down_fd,balance_residual\n";
    for (const auto& r : rows) {
        out << r.hour + 1 << ',' << num(r.da_sell) << ',' << num(r.da_buy);
        for (double x : r.im)
            out << ',' << num(x);
        for (double x : {r.im_total, r.ib_pos, r.ib_neg, r.f, r.f_pos, r.f_neg, r.charge, r.discharge, r.soc, r.wind,
                         r.pv, r.r_up, r.r_down, r.r_up_bess, r.r_down_bess, r.r_up_fd, r.r_down_fd,
                         r.balance_residual})
            out << ',' << num(x);
        out << '\n';
    }
}

void write_percentiles_csv(std::ostream& out,
                           const std::vector<std::pair<PercentileSeries, std::vector<PercentileBand>>>& bands)
{
    out << "series,hour,min,p10,p25,p50,p75,p90,max\n";
    for (const auto& [series, rows] : bands)
        for (const auto& b : rows) {
            out << series_label(series) << ',' << b.hour + 1 << ',' << num(b.min);
            for (double x : b.p)
                out << ',' << num(x);
            out << ',' << num(b.max) << '\n';
        }
}

nlohmann::json decomposition_to_json(const Decomposition& d)
{
    return {{"eecsw", d.eecsw}, {"da", d.da},         {"rm", d.rm}, {"im", d.im},
            {"ib_pos", d.ib_pos}, {"ib_neg", d.ib_neg}, {"fd", d.fd}};
}

} // namespace ecm
