#include "ecm/model_builder.hpp"

#include <algorithm>
#include <stdexcept>

namespace ecm {

namespace {

inline constexpr const char* kSocInit = "soc0";

/// Shorthand for column lookups in the family builders.
struct Cols {
    const MilpModel& m;
    int operator()(const char* symbol, int hour, int w) const { return m.id({symbol, hour, w, -1}); }
    int im(int market, int hour, int w) const { return m.id({sym::intraday, hour, w, market}); }
    int soc_before(int hour, int w) const
    {
        return hour == 0 ? m.id({kSocInit, -1, w, -1}) : m.id({sym::soc, hour - 1, w, -1});
    }
};

} // namespace

void declare_variables(MilpModel& model, const ModelContext& ctx)
{
    const int H = ctx.hours();
    const int S = ctx.scenarios();
    const auto& cfg = ctx.config;
    auto per_hour = [&](const char* symbol, double lo, double hi, VarKind kind = VarKind::Continuous) {
        for (int t = 0; t < H; ++t)
            for (int w = 0; w < S; ++w)
                model.add_variable({symbol, t, w, -1}, lo, hi, kind);
    };
    // Flexible demand.
    per_hour(sym::f, 0.0, kInf);
    per_hour(sym::f_pos, 0.0, kInf);
    per_hour(sym::f_neg, 0.0, kInf);
    // Battery.
    per_hour(sym::charge, 0.0, kInf);
    per_hour(sym::discharge, 0.0, kInf);
    per_hour(sym::is_discharging, 0.0, 1.0, VarKind::Binary);
    for (int w = 0; w < S; ++w)
        model.add_variable({kSocInit, -1, w, -1}, 0.0, 1.0);
    per_hour(sym::soc, cfg.soc_min, cfg.soc_max);
    // Day-ahead.
    per_hour(sym::da_sell, 0.0, kInf);
    per_hour(sym::da_buy, 0.0, kInf);
    per_hour(sym::da_sell_on, 0.0, 1.0, VarKind::Binary);
    per_hour(sym::da_buy_on, 0.0, 1.0, VarKind::Binary);
    // Reserve.
    per_hour(sym::res_up, 0.0, kInf);
    per_hour(sym::res_down, 0.0, kInf);
    per_hour(sym::res_up_bess, 0.0, kInf);
    per_hour(sym::res_down_bess, 0.0, kInf);
    per_hour(sym::res_up_fd, 0.0, kInf);
    per_hour(sym::res_down_fd, 0.0, kInf);
    // Intraday, free sign (positive = sell).
    const auto& markets = ctx.schedule().markets;
    for (int m = 0; m < static_cast<int>(markets.size()); ++m)
        for (int t : markets[m].periods)
            for (int w = 0; w < S; ++w)
                model.add_variable({sym::intraday, t, w, m}, -kInf, kInf);
    // Imbalances with their hourly caps.
    for (int t = 0; t < H; ++t)
        for (int w = 0; w < S; ++w)
            model.add_variable({sym::ib_pos, t, w, -1}, 0.0, cfg.ib_pos_cap.at(t));
    for (int t = 0; t < H; ++t)
        for (int w = 0; w < S; ++w)
            model.add_variable({sym::ib_neg, t, w, -1}, 0.0, cfg.ib_neg_cap.at(t));
}

std::vector<int> add_flexible_demand(MilpModel& model, const ModelContext& ctx)
{
    const Cols col{model};
    const auto& dem = ctx.demand;
    const int H = ctx.hours();
    double total = 0.0;
    for (int t = 0; t < H; ++t)
        total += dem.central[t];

    std::vector<int> rows;
    for (int w = 0; w < ctx.scenarios(); ++w) {
        std::vector<Term> daily;
        for (int t = 0; t < H; ++t)
            daily.push_back({col(sym::f, t, w), 1.0});
        rows.push_back(model.add_row("fd.daily", std::move(daily), RowSense::Equal, total));

        for (const auto& iv : dem.intervals) {
            std::vector<Term> terms;
            double target = 0.0;
            for (int t = iv.first; t <= iv.last; ++t) {
                terms.push_back({col(sym::f, t, w), 1.0});
                target += dem.central[t];
            }
            rows.push_back(model.add_row("fd.interval", std::move(terms), RowSense::GreaterEqual, iv.fraction * target));
        }
        // D_t - f = f+ - f-
        for (int t = 0; t < H; ++t)
            rows.push_back(model.add_row(
                "fd.split", {{col(sym::f, t, w), 1.0}, {col(sym::f_pos, t, w), 1.0}, {col(sym::f_neg, t, w), -1.0}},
                RowSense::Equal, dem.central[t]));
    }
    return rows;
}

std::vector<int> add_bess(MilpModel& model, const ModelContext& ctx)
{
    const Cols col{model};
    const auto& cfg = ctx.config;
    const double pb = cfg.bess_power;
    const double inv_e = 1.0 / cfg.bess_energy;
    std::vector<int> rows;
    for (int w = 0; w < ctx.scenarios(); ++w) {
        rows.push_back(model.add_row("bess.soc_init", {{col.soc_before(0, w), 1.0}}, RowSense::Equal, cfg.soc_init));
        for (int t = 0; t < ctx.hours(); ++t) {
            const int c = col(sym::charge, t, w), d = col(sym::discharge, t, w);
            const int id = col(sym::is_discharging, t, w);
            rows.push_back(model.add_row("bess.discharge_cap", {{d, 1.0}, {id, -pb}}, RowSense::LessEqual, 0.0));
            rows.push_back(model.add_row("bess.charge_cap", {{c, 1.0}, {id, pb}}, RowSense::LessEqual, pb));
            // soc_t - soc_{t-1} - c/E + d/(eta E) = 0
            rows.push_back(model.add_row("bess.soc",
                                         {{col(sym::soc, t, w), 1.0},
                                          {col.soc_before(t, w), -1.0},
                                          {c, -inv_e},
                                          {d, inv_e / cfg.bess_efficiency}},
                                         RowSense::Equal, 0.0));
        }
        rows.push_back(model.add_row("bess.soc_final", {{col(sym::soc, ctx.hours() - 1, w), 1.0}}, RowSense::Equal,
                                     cfg.soc_final));
    }
    return rows;
}

std::vector<int> add_day_ahead(MilpModel& model, const ModelContext& ctx)
{
    const Cols col{model};
    const auto& cfg = ctx.config;
    const auto& dem = ctx.demand;
    std::vector<int> rows;
    for (int t = 0; t < ctx.hours(); ++t) {
        const double sell_cap = cfg.wind_capacity + cfg.pv_capacity + cfg.bess_power - dem.min[t];
        const double buy_cap = cfg.bess_power + dem.max[t];
        for (int w = 0; w < ctx.scenarios(); ++w) {
            const int es = col(sym::da_sell, t, w), eb = col(sym::da_buy, t, w);
            const int is = col(sym::da_sell_on, t, w), ib = col(sym::da_buy_on, t, w);
            rows.push_back(model.add_row("da.sell_min", {{es, 1.0}, {is, -cfg.min_da_bid}}, RowSense::GreaterEqual, 0.0));
            rows.push_back(model.add_row("da.sell_max", {{es, 1.0}, {is, -sell_cap}}, RowSense::LessEqual, 0.0));
            rows.push_back(model.add_row("da.buy_min", {{eb, 1.0}, {ib, -cfg.min_da_bid}}, RowSense::GreaterEqual, 0.0));
            rows.push_back(model.add_row("da.buy_max", {{eb, 1.0}, {ib, -buy_cap}}, RowSense::LessEqual, 0.0));
            rows.push_back(model.add_row("da.exclusive", {{is, 1.0}, {ib, 1.0}}, RowSense::LessEqual, 1.0));
        }
        // Along ascending prices: selling never shrinks, buying never grows.
        // Equal prices must get equal quantities, which the pairwise
        // condition implies in both directions.
        const auto order = da_price_order(ctx.tree, t);
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            const int lo = order[k], hi = order[k + 1];
            const bool tie = ctx.tree.scenario(lo).da_price[t] == ctx.tree.scenario(hi).da_price[t];
            rows.push_back(model.add_row("da.mono_sell", {{col(sym::da_sell, t, lo), 1.0}, {col(sym::da_sell, t, hi), -1.0}},
                                         tie ? RowSense::Equal : RowSense::LessEqual, 0.0));
            rows.push_back(model.add_row("da.mono_buy", {{col(sym::da_buy, t, lo), 1.0}, {col(sym::da_buy, t, hi), -1.0}},
                                         tie ? RowSense::Equal : RowSense::GreaterEqual, 0.0));
            // Implied by the rows above together with the bid-size bounds
            // (a positive quantity forces its indicator on), but the LP
            // relaxation does not see it and branch and bound suffers.
            rows.push_back(model.add_row("da.mono_sell_on",
                                         {{col(sym::da_sell_on, t, lo), 1.0}, {col(sym::da_sell_on, t, hi), -1.0}},
                                         tie ? RowSense::Equal : RowSense::LessEqual, 0.0));
            rows.push_back(model.add_row("da.mono_buy_on",
                                         {{col(sym::da_buy_on, t, lo), 1.0}, {col(sym::da_buy_on, t, hi), -1.0}},
                                         tie ? RowSense::Equal : RowSense::GreaterEqual, 0.0));
        }
    }
    return rows;
}

std::vector<int> add_reserve(MilpModel& model, const ModelContext& ctx)
{
    const Cols col{model};
    const auto& cfg = ctx.config;
    const auto& dem = ctx.demand;
    const double tr = cfg.reserve_duration;
    std::vector<int> rows;
    for (int t = 0; t < ctx.hours(); ++t)
        for (int w = 0; w < ctx.scenarios(); ++w) {
            const int ru = col(sym::res_up, t, w), rd = col(sym::res_down, t, w);
            const int rub = col(sym::res_up_bess, t, w), rdb = col(sym::res_down_bess, t, w);
            const int ruf = col(sym::res_up_fd, t, w), rdf = col(sym::res_down_fd, t, w);
            const int f = col(sym::f, t, w), c = col(sym::charge, t, w), d = col(sym::discharge, t, w);
            const int soc = col(sym::soc, t, w);
            rows.push_back(model.add_row("rm.up_sum", {{ru, 1.0}, {rub, -1.0}, {ruf, -1.0}}, RowSense::Equal, 0.0));
            rows.push_back(model.add_row("rm.down_sum", {{rd, 1.0}, {rdb, -1.0}, {rdf, -1.0}}, RowSense::Equal, 0.0));
            rows.push_back(model.add_row("rm.fd_energy_down", {{f, 1.0}, {rdf, tr}}, RowSense::LessEqual, dem.max[t]));
            rows.push_back(model.add_row("rm.fd_energy_up", {{f, 1.0}, {ruf, -tr}}, RowSense::GreaterEqual, dem.min[t]));
            rows.push_back(model.add_row("rm.fd_power_down", {{rdf, 1.0}}, RowSense::LessEqual, cfg.fd_reserve_down.at(t)));
            rows.push_back(model.add_row("rm.fd_power_up", {{ruf, 1.0}}, RowSense::LessEqual, cfg.fd_reserve_up.at(t)));
            rows.push_back(model.add_row("rm.bess_power_up", {{rub, 1.0}, {c, -1.0}, {d, 1.0}}, RowSense::LessEqual,
                                         cfg.bess_power));
            rows.push_back(model.add_row("rm.bess_power_down", {{rdb, 1.0}, {c, 1.0}, {d, -1.0}}, RowSense::LessEqual,
                                         cfg.bess_power));
            rows.push_back(model.add_row("rm.bess_soc_up",
                                         {{soc, 1.0}, {rub, -tr / (cfg.bess_efficiency * cfg.bess_energy)}},
                                         RowSense::GreaterEqual, cfg.soc_min));
            rows.push_back(model.add_row("rm.bess_soc_down", {{soc, 1.0}, {rdb, tr / cfg.bess_energy}},
                                         RowSense::LessEqual, cfg.soc_max));
        }
    return rows;
}

std::vector<int> add_intraday(MilpModel& model, const ModelContext& ctx)
{
    const Cols col{model};
    const double ratio = ctx.config.im_ratio;
    const auto& sch = ctx.schedule();
    std::vector<int> rows;
    for (int t = 0; t < ctx.hours(); ++t) {
        const auto markets = sch.markets_at_hour(t);
        if (markets.empty())
            continue;
        for (int w = 0; w < ctx.scenarios(); ++w) {
            const int es = col(sym::da_sell, t, w), eb = col(sym::da_buy, t, w);
            // -R (e+ + e-) <= x <= R (e+ + e-) for the aggregate and each market.
            auto bound = [&](const std::string& family, std::vector<Term> x) {
                auto upper = x, lower = x;
                upper.push_back({es, -ratio});
                upper.push_back({eb, -ratio});
                lower.push_back({es, ratio});
                lower.push_back({eb, ratio});
                rows.push_back(model.add_row(family + "_upper", std::move(upper), RowSense::LessEqual, 0.0));
                rows.push_back(model.add_row(family + "_lower", std::move(lower), RowSense::GreaterEqual, 0.0));
            };
            std::vector<Term> total;
            for (int m : markets)
                total.push_back({col.im(m, t, w), 1.0});
            bound("im.aggregate", total);
            for (int m : markets)
                bound("im.market", {{col.im(m, t, w), 1.0}});
        }
    }
    return rows;
}

std::vector<int> add_imbalance(MilpModel& model, const ModelContext& ctx)
{
    const Cols col{model};
    const auto& sch = ctx.schedule();
    std::vector<int> rows;
    for (int t = 0; t < ctx.hours(); ++t) {
        const auto markets = sch.markets_at_hour(t);
        for (int w = 0; w < ctx.scenarios(); ++w) {
            const auto& data = ctx.tree.scenario(w);
            // e+ - e- - eDA- - d + eDA+ + sum eIM + f + c = W + PV
            std::vector<Term> terms{{col(sym::ib_pos, t, w), 1.0},    {col(sym::ib_neg, t, w), -1.0},
                                    {col(sym::da_buy, t, w), -1.0},   {col(sym::discharge, t, w), -1.0},
                                    {col(sym::da_sell, t, w), 1.0},   {col(sym::f, t, w), 1.0},
                                    {col(sym::charge, t, w), 1.0}};
            for (int m : markets)
                terms.push_back({col.im(m, t, w), 1.0});
            rows.push_back(model.add_row("ib.balance", std::move(terms), RowSense::Equal, data.wind[t] + data.pv[t]));
        }
    }
    return rows;
}

int nac_stage(const StageSchedule& schedule, const std::string& symbol, int hour, int market)
{
    static const std::vector<std::string> first_stage{sym::da_sell,      sym::da_buy,        sym::da_sell_on,
                                                      sym::da_buy_on,    sym::res_up,        sym::res_down,
                                                      sym::res_up_bess,  sym::res_down_bess, sym::res_up_fd,
                                                      sym::res_down_fd};
    static const std::vector<std::string> operation{sym::f,         sym::f_pos,          sym::f_neg, sym::charge,
                                                    sym::discharge, sym::is_discharging, sym::soc};
    if (std::find(first_stage.begin(), first_stage.end(), symbol) != first_stage.end())
        return schedule.da_stage;
    if (symbol == sym::intraday)
        return schedule.markets.at(market).stage - 1;
    if (std::find(operation.begin(), operation.end(), symbol) != operation.end())
        return schedule.renewable_stage.at(hour) - 1;
    if (symbol == sym::ib_pos || symbol == sym::ib_neg)
        return schedule.renewable_stage.at(hour);
    return -1;
}

std::vector<int> add_nonanticipativity(MilpModel& model, const ModelContext& ctx)
{
    const auto& sch = ctx.schedule();
    std::vector<std::vector<Cluster>> clusters(static_cast<std::size_t>(sch.total_stages()));
    auto clusters_for = [&](int stage) -> const std::vector<Cluster>& {
        auto& c = clusters.at(stage);
        if (c.empty())
            c = clusters_at(ctx.tree, stage);
        return c;
    };
    std::vector<int> rows;
    auto chain = [&](const std::string& family, const char* symbol, int hour, int market) {
        const int stage = nac_stage(sch, symbol, hour, market);
        for (const auto& cl : clusters_for(stage))
            for (std::size_t k = 0; k + 1 < cl.scenarios.size(); ++k) {
                const int a = model.id({symbol, hour, cl.scenarios[k], market});
                const int b = model.id({symbol, hour, cl.scenarios[k + 1], market});
                rows.push_back(model.add_row(family, {{a, 1.0}, {b, -1.0}}, RowSense::Equal, 0.0));
            }
    };
    for (int t = 0; t < ctx.hours(); ++t)
        for (const char* s : {sym::da_sell, sym::da_buy, sym::da_sell_on, sym::da_buy_on})
            chain("nac.da", s, t, -1);
    for (int t = 0; t < ctx.hours(); ++t)
        for (const char* s : {sym::res_up, sym::res_down, sym::res_up_bess, sym::res_down_bess, sym::res_up_fd,
                              sym::res_down_fd})
            chain("nac.rm", s, t, -1);
    for (int m = 0; m < static_cast<int>(sch.markets.size()); ++m)
        for (int t : sch.markets[m].periods)
            chain("nac.im", sym::intraday, t, m);
    for (int t = 0; t < ctx.hours(); ++t)
        for (const char* s : {sym::f, sym::f_pos, sym::f_neg, sym::charge, sym::discharge, sym::is_discharging, sym::soc})
            chain("nac.operation", s, t, -1);
    for (int t = 0; t < ctx.hours(); ++t)
        for (const char* s : {sym::ib_pos, sym::ib_neg})
            chain("nac.imbalance", s, t, -1);
    return rows;
}

void build_objective(MilpModel& model, const ModelContext& ctx)
{
    const Cols col{model};
    const auto& sch = ctx.schedule();
    std::vector<Term> obj;
    for (int t = 0; t < ctx.hours(); ++t) {
        const auto markets = sch.markets_at_hour(t);
        for (int w = 0; w < ctx.scenarios(); ++w) {
            const double p = ctx.tree.probability(w);
            const auto& d = ctx.tree.scenario(w);
            obj.push_back({col(sym::da_sell, t, w), p * d.da_price[t]});
            obj.push_back({col(sym::da_buy, t, w), -p * d.da_price[t]});
            obj.push_back({col(sym::res_down, t, w), p * d.rm_price[t]});
            obj.push_back({col(sym::res_up, t, w), p * d.rm_price[t]});
            for (int m : markets)
                obj.push_back({col.im(m, t, w), p * d.im_price[m][sch.period_offset(m, t)]});
            obj.push_back({col(sym::ib_pos, t, w), p * d.ib_pos_price[t]});
            obj.push_back({col(sym::ib_neg, t, w), -p * d.ib_neg_price[t]});
            obj.push_back({col(sym::f_pos, t, w), -p * ctx.demand.flex_cost});
            obj.push_back({col(sym::f_neg, t, w), -p * ctx.demand.flex_cost});
        }
    }
    model.set_objective(std::move(obj), true);
}

MilpModel build_model(const ScenarioTree& tree, const EcConfig& config, const DemandProfile& demand)
{
    std::vector<std::string> problems;
    if (demand.hours() != tree.schedule().hours)
        problems.push_back("demand covers " + std::to_string(demand.hours()) + " hours, schedule " +
                           std::to_string(tree.schedule().hours));
    for (auto& p : demand.check())
        problems.push_back("demand: " + p);
    const EcConfig cfg = problems.empty() ? config.resolved(demand) : config;
    for (auto& p : cfg.check())
        problems.push_back("config: " + p);
    for (auto& p : validate_tree(tree, &cfg).violations)
        problems.push_back("tree: " + p);
    if (!problems.empty()) {
        std::string msg = "inconsistent model inputs:";
        for (const auto& p : problems)
            msg += "\n  " + p;
        throw std::invalid_argument(msg);
    }

    const ModelContext ctx{tree, cfg, demand};
    MilpModel model;
    declare_variables(model, ctx);
    add_flexible_demand(model, ctx);
    add_bess(model, ctx);
    add_day_ahead(model, ctx);
    add_reserve(model, ctx);
    add_intraday(model, ctx);
    add_imbalance(model, ctx);
    add_nonanticipativity(model, ctx);
    build_objective(model, ctx);
    return model;
}

void add_elastic_slacks(MilpModel& model, double penalty)
{
    std::vector<Term> obj = model.objective();
    const double sign = model.maximize() ? -1.0 : 1.0;
    const auto& rows = model.rows();
    // Columns can only be appended, so rebuild the model with slack terms.
    MilpModel out;
    for (std::size_t v = 0; v < model.variable_count(); ++v) {
        const auto& var = model.variable(static_cast<int>(v));
        out.add_variable(model.key(static_cast<int>(v)), var.lower, var.upper, var.kind);
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto row = rows[r];
        if (row.family.rfind("nac.", 0) != 0) {
            const std::string tag = row.family + "/" + MilpModel::row_name(static_cast<int>(r));
            if (row.sense != RowSense::GreaterEqual) {
                const int s = out.add_variable({"slack-:" + tag}, 0.0, kInf);
                row.terms.push_back({s, -1.0});
                obj.push_back({s, sign * penalty});
            }
            if (row.sense != RowSense::LessEqual) {
                const int s = out.add_variable({"slack+:" + tag}, 0.0, kInf);
                row.terms.push_back({s, 1.0});
                obj.push_back({s, sign * penalty});
            }
        }
        out.add_row(row.family, std::move(row.terms), row.sense, row.rhs);
    }
    out.set_objective(std::move(obj), model.maximize());
    model = std::move(out);
}

std::map<std::string, double> elastic_usage(const MilpModel& model, const std::vector<double>& values)
{
    std::map<std::string, double> usage;
    for (std::size_t v = 0; v < model.variable_count(); ++v) {
        const auto& key = model.key(static_cast<int>(v));
        if (key.symbol.rfind("slack", 0) != 0)
            continue;
        const auto colon = key.symbol.find(':');
        const auto slash = key.symbol.rfind('/');
        const std::string family = key.symbol.substr(colon + 1, slash - colon - 1);
        if (values.at(v) > 1e-9)
            usage[family] += values[v];
    }
    return usage;
}

nlohmann::json registry_to_json(const MilpModel& model)
{
    nlohmann::json vars = nlohmann::json::object();
    for (std::size_t v = 0; v < model.variable_count(); ++v)
        vars[model.key(static_cast<int>(v)).to_string()] = MilpModel::column_name(static_cast<int>(v));
    nlohmann::json fams = nlohmann::json::object();
    for (const auto& [family, ids] : model.families()) {
        auto& list = fams[family] = nlohmann::json::array();
        for (int r : ids)
            list.push_back(MilpModel::row_name(r));
    }
    return {{"variables", vars}, {"families", fams}};
}

} // namespace ecm
