#include "ecm/pipeline.hpp"

#include "ecm/model_builder.hpp"
#include "ecm/tree_io.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace ecm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> hourly(const json& doc, const char* key)
{
    return doc.contains(key) ? doc.at(key).get<std::vector<double>>() : std::vector<double>{};
}

EcConfig assets_from_json(const json& a)
{
    EcConfig c;
    c.pv_capacity = a.value("pv_capacity", c.pv_capacity);
    c.wind_capacity = a.value("wind_capacity", c.wind_capacity);
    c.bess_energy = a.value("bess_energy", c.bess_energy);
    c.bess_power = a.value("bess_power", c.bess_power);
    c.bess_efficiency = a.value("bess_efficiency", c.bess_efficiency);
    c.soc_min = a.value("soc_min", c.soc_min);
    c.soc_max = a.value("soc_max", c.soc_max);
    c.soc_init = a.value("soc_init", c.soc_init);
    c.soc_final = a.value("soc_final", c.soc_final);
    c.min_da_bid = a.value("min_da_bid", c.min_da_bid);
    c.im_ratio = a.value("im_ratio", c.im_ratio);
    c.reserve_duration = a.value("reserve_duration", c.reserve_duration);
    c.fd_reserve_limit = a.value("fd_reserve_limit", c.fd_reserve_limit);
    c.ib_cap_fraction = a.value("ib_cap_fraction", c.ib_cap_fraction);
    c.fd_reserve_up = hourly(a, "fd_reserve_up");
    c.fd_reserve_down = hourly(a, "fd_reserve_down");
    c.ib_pos_cap = hourly(a, "ib_pos_cap");
    c.ib_neg_cap = hourly(a, "ib_neg_cap");
    return c;
}

fs::path resolve(const fs::path& base, const std::string& p)
{
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::string replace_all(std::string s, const std::string& key, const std::string& value)
{
    for (std::size_t pos = 0; (pos = s.find(key, pos)) != std::string::npos; pos += value.size())
        s.replace(pos, key.size(), value);
    return s;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", std::fabs(v) < 5e-7 ? 0.0 : v);
    return buf;
}

} // namespace

RunConfig run_config_from_json(const json& doc, const fs::path& base_dir)
{
    RunConfig cfg;
    for (const auto& [key, _] : doc.items())
        if (key != "assets" && key != "demand" && key != "data" && key != "fan" && key != "reduction_plan" &&
            key != "solver" && key != "days" && key != "workers" && key != "horizon_hours" &&
            key != "reference_preset" && key != "description")
            throw std::invalid_argument("unknown config section '" + key + "'");

    cfg.assets = assets_from_json(doc.value("assets", json::object()));

    const json& dem = doc.at("demand");
    cfg.demand = load_demand(resolve(base_dir, dem.at("file").get<std::string>()));
    cfg.demand.flex_cost = dem.value("flex_cost", 0.0);
    for (const auto& iv : dem.value("intervals", json::array()))
        cfg.demand.intervals.push_back(
            {iv.at("first").get<int>() - 1, iv.at("last").get<int>() - 1, iv.at("fraction").get<double>()});
    if (auto problems = cfg.demand.check(); !problems.empty())
        throw std::invalid_argument("demand: " + problems.front());

    const json& data = doc.at("data");
    cfg.price_file = resolve(base_dir, data.at("prices").get<std::string>());
    cfg.renewable_file = resolve(base_dir, data.at("renewables").get<std::string>());

    const json fan = doc.value("fan", json::object());
    cfg.fan_size = fan.value("size", cfg.fan_size);
    cfg.seed = fan.value("seed", cfg.seed);

    const json plan = doc.value("reduction_plan", json::object());
    cfg.reduction_children = plan.value("children", std::vector<int>{});
    if (plan.contains("weights") && plan.at("weights").is_object()) {
        SeriesWeights w;
        for (int s = 0; s < kSeriesCount; ++s)
            w.value[s] = plan.at("weights").value(series_name(static_cast<Series>(s)), 1.0);
        cfg.weights = w;
    }

    const json solver = doc.value("solver", json::object());
    const std::string mode = solver.value("mode", "auto");
    if (mode == "auto")
        cfg.solver.mode = SolverMode::Auto;
    else if (mode == "external")
        cfg.solver.mode = SolverMode::External;
    else if (mode == "reference")
        cfg.solver.mode = SolverMode::Reference;
    else
        throw std::invalid_argument("solver.mode must be auto, external or reference");
    cfg.solver.command = replace_all(solver.value("command", ""), "{config_dir}", base_dir.string());
    cfg.solver.format = parse_solution_format(solver.value("format", "highs"));
    cfg.solver.time_limit = solver.value("time_limit", cfg.solver.time_limit);
    cfg.solver.kill_after = solver.value("kill_after", cfg.solver.kill_after);
    cfg.solver.elastic_penalty = solver.value("elastic_penalty", 0.0);

    cfg.horizon_hours = doc.value("horizon_hours", cfg.demand.hours());
    if (cfg.horizon_hours != cfg.demand.hours())
        cfg.demand = cfg.demand.truncated(cfg.horizon_hours);
    const json ref = doc.value("reference_preset", json::object());
    cfg.reference.hours = ref.value("hours", cfg.reference.hours);
    cfg.reference.children = ref.value("children", cfg.reference.children);

    const json& days = doc.at("days");
    if (days.is_array()) {
        for (const auto& d : days)
            cfg.days.push_back(parse_date(d.get<std::string>()));
    } else {
        Date d = parse_date(days.at("from").get<std::string>());
        const Date to = parse_date(days.at("to").get<std::string>());
        for (; std::chrono::sys_days(d) <= std::chrono::sys_days(to); d = next_day(d))
            cfg.days.push_back(d);
    }
    if (cfg.days.empty())
        throw std::invalid_argument("no days configured");
    cfg.workers = std::max(1, doc.value("workers", 1));
    if (cfg.fan_size < 1)
        throw std::invalid_argument("fan.size must be positive");
    return cfg;
}

RunConfig load_run_config(const fs::path& path)
{
    return run_config_from_json(read_json_file(path), fs::absolute(path).parent_path());
}

std::uint64_t day_seed(std::uint64_t seed, const Date& day)
{
    const auto days = static_cast<std::uint64_t>(std::chrono::sys_days(day).time_since_epoch().count());
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (days + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

SolvePlan plan_solve(const RunConfig& cfg)
{
    SolvePlan plan;
    bool external = cfg.solver.mode == SolverMode::External;
    if (cfg.solver.mode == SolverMode::Auto && !cfg.solver.command.empty()) {
        // Probe with max x s.t. x <= 3.
        MilpModel probe;
        const int x = probe.add_variable({"x"}, 0.0, kInf);
        probe.add_row("probe", {{x, 1.0}}, RowSense::LessEqual, 3.0);
        probe.set_objective({{x, 1.0}}, true);
        ExternalSolver ex{cfg.solver.command, cfg.solver.format, 30.0, 30.0, {}, "probe"};
        try {
            const Solution s = solve_external(probe, ex);
            external = s.status == SolveStatus::Optimal && std::fabs(s.objective - 3.0) < 1e-9;
            if (!external)
                plan.note = "external solver probe returned a wrong answer";
        } catch (const std::exception& e) {
            plan.note = std::string("external solver unavailable: ") + e.what();
        }
    } else if (cfg.solver.mode == SolverMode::Auto) {
        plan.note = "no external solver command configured";
    }
    if (external && cfg.solver.command.empty())
        throw std::invalid_argument("solver.mode is external but no command is configured");
    plan.external = external;

    if (external) {
        plan.schedule = cfg.horizon_hours == 24 ? StageSchedule::standard() : StageSchedule::truncated(cfg.horizon_hours);
        plan.demand = cfg.demand;
        plan.assets = cfg.assets.truncated(cfg.horizon_hours);
        plan.reduction = ReductionPlan::market_stages(plan.schedule, cfg.reduction_children);
    } else {
        const int hours = std::min(cfg.reference.hours, cfg.horizon_hours);
        plan.schedule = StageSchedule::truncated(hours);
        plan.demand = cfg.demand.truncated(hours);
        plan.assets = cfg.assets.truncated(hours);
        plan.reduction = ReductionPlan::market_stages(plan.schedule, cfg.reference.children);
        if (plan.note.empty())
            plan.note = "reference solver requested";
        plan.note += "; reference preset: " + std::to_string(hours) + " hours, at most " +
                     std::to_string(plan.reduction.max_leaves()) + " scenarios";
    }
    if (cfg.weights)
        plan.reduction.weights = *cfg.weights;
    plan.standardize_weights = !cfg.weights;
    if (auto problems = plan.reduction.check(cfg.fan_size, plan.schedule); !problems.empty())
        throw std::invalid_argument("reduction plan: " + problems.front());
    return plan;
}

ScenarioFan day_fan(const RunConfig& cfg, const SolvePlan& plan, const HistoricalWindow& history, const Date& day)
{
    const HistoricalWindow window = history.before(day);
    if (window.empty())
        throw std::runtime_error("no historical days before " + format_date(day));
    return sample_fan(window, plan.assets, day, cfg.fan_size, day_seed(cfg.seed, day), plan.schedule);
}

ScenarioTree day_tree(const SolvePlan& plan, const ScenarioFan& fan)
{
    ReductionPlan rp = plan.reduction;
    if (plan.standardize_weights)
        rp.weights = standardizing_weights(fan.scenarios, fan.schedule);
    return build_tree(fan, rp);
}

Solution solve_model(const MilpModel& model, const RunConfig& cfg, const SolvePlan& plan, const fs::path& work_dir)
{
    if (!plan.external)
        return solve_reference(model);
    ExternalSolver ex{cfg.solver.command, cfg.solver.format, cfg.solver.time_limit, cfg.solver.kill_after, work_dir,
                      "model"};
    return solve_external(model, ex);
}

json solution_to_json(const MilpModel& model, const Solution& sol)
{
    json values = json::object();
    for (std::size_t j = 0; j < sol.values.size(); ++j)
        values[MilpModel::column_name(static_cast<int>(j))] = sol.values[j];
    return {{"status", status_name(sol.status)}, {"objective", sol.objective}, {"solver", sol.solver},
            {"gap", sol.gap},                    {"message", sol.message},     {"variables", model.variable_count()},
            {"values", values}};
}

Solution solution_from_json(const json& doc, const MilpModel& model)
{
    Solution sol;
    const std::string status = doc.at("status").get<std::string>();
    if (status == "optimal")
        sol.status = SolveStatus::Optimal;
    else if (status == "infeasible")
        sol.status = SolveStatus::Infeasible;
    else if (status == "unbounded")
        sol.status = SolveStatus::Unbounded;
    else if (status == "limit")
        sol.status = SolveStatus::Limit;
    else
        throw std::invalid_argument("unknown solution status " + status);
    sol.objective = doc.value("objective", 0.0);
    sol.solver = doc.value("solver", "");
    sol.gap = doc.value("gap", 0.0);
    const json& values = doc.at("values");
    if (!values.empty()) {
        if (values.size() != model.variable_count())
            throw std::invalid_argument("solution does not match the model (" + std::to_string(values.size()) +
                                        " values for " + std::to_string(model.variable_count()) + " columns)");
        sol.values.assign(model.variable_count(), 0.0);
        for (std::size_t j = 0; j < model.variable_count(); ++j)
            sol.values[j] = values.at(MilpModel::column_name(static_cast<int>(j))).get<double>();
    }
    return sol;
}

Decomposition write_day_reports(const fs::path& dir, const MilpModel& model, const Solution& sol,
                                const ScenarioTree& tree, const DemandProfile& demand, double* max_residual)
{
    if (!sol.has_values())
        throw std::runtime_error(std::string("no solution to report (status ") + status_name(sol.status) + ")");
    auto open = [&](const std::string& name) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write " + (dir / name).string());
        return out;
    };

    const ResidualReport res = check_solution(model, sol.values, 1e-7);
    {
        json fam = json::object();
        for (const auto& [family, r] : res.family_max)
            fam[family] = r;
        write_json_file({{"max_residual", res.max_residual},
                         {"families", fam},
                         {"violated_rows", res.violated_rows.size()},
                         {"bound_violations", res.bound_violations.size()},
                         {"integrality_violations", res.integrality_violations.size()}},
                        dir / "residuals.json");
    }
    if (max_residual)
        *max_residual = res.max_residual;
    if (!res.ok())
        throw std::runtime_error("solution violates the model: max residual " + std::to_string(res.max_residual));

    const auto& sch = tree.schedule();
    std::vector<BidCurve> curves;
    json curves_json = json::array();
    for (int h = 0; h < sch.hours; ++h) {
        curves.push_back(extract_da_curve(model, sol.values, tree, h));
        const CurveCheck check = check_curve(curves.back());
        if (!check.ok())
            throw std::runtime_error("day-ahead curve of hour " + std::to_string(h + 1) + " is not monotone");
        json pts = json::array();
        for (const auto& p : curves.back().points)
            pts.push_back({{"price", p.price}, {"quantity", p.quantity}});
        curves_json.push_back({{"hour", h + 1}, {"points", pts}});
    }
    {
        auto out = open("da_bids.csv");
        write_curves_csv(out, curves, false);
        auto step = open("da_bids_step.csv");
        write_curves_csv(step, curves, true);
    }
    const auto accepting = price_accepting_bids(model, sol.values, tree);
    {
        auto out = open("price_accepting.csv");
        write_price_accepting_csv(out, accepting);
    }
    fs::create_directories(dir / "behaviour");
    for (int w = 0; w < tree.scenario_count(); ++w) {
        char name[48];
        std::snprintf(name, sizeof name, "behaviour/scenario_%03d.csv", w);
        auto out = open(name);
        write_behaviour_csv(out, sch, behaviour_report(model, sol.values, tree, w));
    }
    std::vector<std::pair<PercentileSeries, std::vector<PercentileBand>>> bands;
    for (auto s : {PercentileSeries::Pv, PercentileSeries::Wind, PercentileSeries::FlexDemand, PercentileSeries::Soc})
        bands.push_back({s, percentile_report(model, sol.values, tree, s)});
    {
        auto out = open("percentiles.csv");
        write_percentiles_csv(out, bands);
    }
    const Decomposition dec = eecsw_decomposition(model, sol.values, tree, demand);
    if (std::fabs(dec.sum() - sol.objective) > 1e-6 * std::max(1.0, std::fabs(sol.objective)))
        throw std::runtime_error("objective decomposition does not add up to the solver objective");
    write_json_file(decomposition_to_json(dec), dir / "decomposition.json");
    write_json_file({{"curve_rendering", "step: q_j holds from p_j up to the next price"},
                     {"quantity_sign", "negative buys, positive sells"},
                     {"da_curves", curves_json},
                     {"decomposition", decomposition_to_json(dec)},
                     {"max_residual", res.max_residual}},
                    dir / "report.json");
    return dec;
}

namespace {

class DayLog {
public:
    explicit DayLog(const fs::path& file) : out_(file), start_(std::chrono::steady_clock::now()) {}
    void operator()(const std::string& msg)
    {
        const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        char buf[32];
        std::snprintf(buf, sizeof buf, "[%8.3f] ", t);
        out_ << buf << msg << std::endl;
    }

private:
    std::ofstream out_;
    std::chrono::steady_clock::time_point start_;
};

DayResult run_day(const RunConfig& cfg, const SolvePlan& plan, const HistoricalWindow& history, const Date& day,
                  const fs::path& dir)
{
    DayResult r;
    r.date = day;
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir);
    DayLog log(dir / "day.log");
    r.solver = plan.external ? "external" : "reference";
    try {
        log("day " + format_date(day) + ", solver " + r.solver + (plan.note.empty() ? "" : " (" + plan.note + ")"));
        const ScenarioFan fan = day_fan(cfg, plan, history, day);
        log("fan: " + std::to_string(fan.size()) + " scenarios");
        const ScenarioTree tree = day_tree(plan, fan);
        r.scenarios = tree.scenario_count();
        write_tree(tree, dir / "tree.json");
        log("tree: " + std::to_string(tree.scenario_count()) + " scenarios, " + std::to_string(tree.nodes().size()) +
            " nodes");

        const MilpModel model = build_model(tree, plan.assets, plan.demand);
        write_mps(model, dir / "model.mps", "ECM");
        write_json_file(registry_to_json(model), dir / "registry.json");
        log("model: " + std::to_string(model.variable_count()) + " columns (" + std::to_string(model.binary_count()) +
            " binary), " + std::to_string(model.row_count()) + " rows");

        const Solution sol = solve_model(model, cfg, plan, dir / "solver");
        r.status = status_name(sol.status);
        r.solve_seconds = sol.wall_time;
        write_json_file(solution_to_json(model, sol), dir / "solution.json");
        log("solve: " + r.status + ", objective " + fmt(sol.objective) + ", " + fmt(sol.wall_time) + " s");

        if (sol.status == SolveStatus::Infeasible && cfg.solver.elastic_penalty > 0.0) {
            MilpModel elastic = model;
            add_elastic_slacks(elastic, cfg.solver.elastic_penalty);
            RunConfig diag = cfg;   // a diagnosis, not worth the full budget
            diag.solver.time_limit = std::min(cfg.solver.time_limit, 120.0);
            const Solution es = solve_model(elastic, diag, plan, dir / "elastic");
            json usage = json::object();
            if (es.has_values())
                for (const auto& [family, amount] : elastic_usage(elastic, es.values))
                    usage[family] = amount;
            write_json_file({{"status", status_name(es.status)}, {"slack_by_family", usage}},
                            dir / "infeasibility.json");
            log("elastic diagnosis written to infeasibility.json");
        }
        if (sol.status != SolveStatus::Optimal)
            throw std::runtime_error("solver status " + r.status);

        r.decomposition = write_day_reports(dir, model, sol, tree, plan.demand, &r.max_residual);
        log("reports written, EECSW " + fmt(r.decomposition.eecsw));
        r.ok = true;
    } catch (const std::exception& e) {
        r.error = e.what();
        log(std::string("FAILED: ") + e.what());
    }
    std::ofstream(dir / (r.ok ? "OK" : "FAILED")) << (r.ok ? "" : r.error + "\n");
    return r;
}

} // namespace

bool PipelineResult::ok() const
{
    return std::all_of(days.begin(), days.end(), [](const DayResult& d) { return d.ok; });
}

PipelineResult run_pipeline(const RunConfig& cfg, const fs::path& out_dir, std::ostream& progress)
{
    fs::create_directories(out_dir);
    PipelineResult result;
    result.plan = plan_solve(cfg);
    const HistoryLoad history = load_history(cfg.price_file, cfg.renewable_file);

    std::mutex mu;
    auto say = [&](const std::string& msg) {
        std::lock_guard lock(mu);
        progress << msg << std::endl;
    };
    say(std::string("solver: ") + (result.plan.external ? "external" : "reference") +
        (result.plan.note.empty() ? "" : " (" + result.plan.note + ")"));
    for (const auto& w : history.warnings)
        say("history: " + w);

    result.days.resize(cfg.days.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < cfg.days.size();) {
            const Date day = cfg.days[i];
            result.days[i] = run_day(cfg, result.plan, history.window, day, out_dir / format_date(day));
            const auto& r = result.days[i];
            say(format_date(day) + ": " + (r.ok ? "ok, EECSW " + fmt(r.decomposition.eecsw) : "FAILED: " + r.error));
        }
    };
    const int n = std::min<int>(cfg.workers, static_cast<int>(cfg.days.size()));
    std::vector<std::thread> pool;
    for (int k = 1; k < n; ++k)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    {
        std::ofstream out(out_dir / "summary.csv", std::ios::binary);
        write_summary_csv(out, result.days);
    }
    json days = json::array();
    for (const auto& d : result.days)
        days.push_back({{"date", format_date(d.date)},
                        {"ok", d.ok},
                        {"error", d.error},
                        {"status", d.status},
                        {"scenarios", d.scenarios},
                        {"solve_seconds", d.solve_seconds},
                        {"max_residual", d.max_residual},
                        {"decomposition", decomposition_to_json(d.decomposition)}});
    write_json_file({{"solver", result.plan.external ? "external" : "reference"},
                     {"note", result.plan.note},
                     {"hours", result.plan.schedule.hours},
                     {"max_scenarios", result.plan.reduction.max_leaves()},
                     {"fan_size", cfg.fan_size},
                     {"seed", cfg.seed},
                     {"days", days}},
                    out_dir / "run.json");
    return result;
}

void write_summary_csv(std::ostream& out, const std::vector<DayResult>& days)
{
    out << "date,status,solver,scenarios,eecsw,da,rm,im,ib_pos,ib_neg,fd\n";
    for (const auto& d : days) {
        out << format_date(d.date) << ',' << (d.ok ? "ok" : "failed") << ',' << d.solver << ',' << d.scenarios;
        if (d.ok) {
            const auto& x = d.decomposition;
            for (double v : {x.eecsw, x.da, x.rm, x.im, x.ib_pos, x.ib_neg, x.fd})
                out << ',' << fmt(v);
        } else {
            out << ",,,,,,,";
        }
        out << '\n';
    }
}

} // namespace ecm
