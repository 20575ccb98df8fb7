// ecm: command-line front end. Every subcommand reads the run configuration
// (--config) for assets, demand, data files and solver settings; the
// per-step subcommands exchange JSON/MPS files so a day can be run by hand
// one stage at a time, and `pipeline` runs all configured days.

#include "ecm/model_builder.hpp"
#include "ecm/pipeline.hpp"
#include "ecm/renewables.hpp"
#include "ecm/tree_io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::string config;
    std::string out_dir = ".";
    std::string solver_cmd;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
};

ecm::RunConfig load_config(const Globals& g)
{
    if (g.config.empty())
        throw CLI::RequiredError("--config");
    ecm::RunConfig cfg = ecm::load_run_config(g.config);
    if (g.seed)
        cfg.seed = *g.seed;
    if (g.workers)
        cfg.workers = std::max(1, *g.workers);
    if (g.solver_cmd == "reference") {
        cfg.solver.mode = ecm::SolverMode::Reference;
    } else if (!g.solver_cmd.empty()) {
        cfg.solver.command = g.solver_cmd;
        if (cfg.solver.mode == ecm::SolverMode::Reference)
            cfg.solver.mode = ecm::SolverMode::Auto;
    }
    return cfg;
}

fs::path out_dir(const Globals& g)
{
    fs::create_directories(g.out_dir);
    return g.out_dir;
}

// Assets and demand for a tree read back from disk.
struct Inputs {
    ecm::EcConfig assets;
    ecm::DemandProfile demand;
};

Inputs inputs_for(const ecm::RunConfig& cfg, const ecm::ScenarioTree& tree)
{
    const int hours = tree.schedule().hours;
    if (hours > cfg.demand.hours())
        throw std::invalid_argument("tree covers " + std::to_string(hours) + " hours but the demand only " +
                                    std::to_string(cfg.demand.hours()));
    return {cfg.assets.truncated(hours), cfg.demand.truncated(hours)};
}

ecm::ScenarioFan fan_from_tree(const ecm::ScenarioTree& tree)
{
    ecm::ScenarioFan fan;
    fan.schedule = tree.schedule();
    fan.scenarios = tree.data();
    fan.probabilities = tree.probabilities();
    return fan;
}

void write_renewables_csv(const fs::path& path, int year, const std::vector<double>& wind,
                          const std::vector<double>& pv)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "date,hour,wind_cf,pv_cf\n";
    ecm::Date d{std::chrono::year(year), std::chrono::January, std::chrono::day(1)};
    for (std::size_t i = 0; i + 24 <= wind.size(); i += 24, d = ecm::next_day(d))
        for (int h = 0; h < 24; ++h) {
            char line[96];
            std::snprintf(line, sizeof line, "%s,%d,%.4f,%.4f\n", ecm::format_date(d).c_str(), h + 1, wind[i + h],
                          pv[i + h]);
            out << line;
        }
}

int run(int argc, char** argv)
{
    CLI::App app{"Stochastic market participation of an energy community"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "run configuration (JSON)");
    app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
    app.add_option("--solver-cmd", g.solver_cmd,
                   "external solver command with {mps} {sol} {time_limit}, or 'reference'");
    app.add_option("--seed", g.seed, "override the fan seed");
    app.add_option("--workers", g.workers, "days solved concurrently");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "check historical CSVs, or fetch capacity factors");
    std::string prices, renewables;
    bool fetch = false;
    double lat = 0, lon = 0;
    int year = 2023;
    ingest->add_option("--prices", prices, "price CSV (defaults to the config's)");
    ingest->add_option("--renewables", renewables, "renewable CSV (defaults to the config's)");
    ingest->add_flag("--fetch", fetch, "download wind and PV capacity factors from renewables.ninja");
    ingest->add_option("--lat", lat);
    ingest->add_option("--lon", lon);
    ingest->add_option("--year", year)->capture_default_str();

    auto* fan_cmd = app.add_subcommand("fan", "bootstrap the scenario fan of one day");
    std::string date;
    fan_cmd->add_option("--date", date, "target day YYYY-MM-DD")->required();

    auto* tree_cmd = app.add_subcommand("tree", "reduce a fan to the scenario tree");
    std::string fan_file;
    tree_cmd->add_option("--date", date, "target day (the fan is sampled)");
    tree_cmd->add_option("--fan", fan_file, "fan JSON written by `ecm fan`");

    auto* build = app.add_subcommand("build", "write the MILP of a tree as MPS");
    std::string tree_file;
    bool lp = false;
    build->add_option("--tree", tree_file)->required()->check(CLI::ExistingFile);
    build->add_flag("--lp", lp, "also write a readable LP file");

    auto* solve = app.add_subcommand("solve", "build and solve the MILP of a tree");
    solve->add_option("--tree", tree_file)->required()->check(CLI::ExistingFile);

    auto* bids = app.add_subcommand("bids", "extract the bidding curves of a solution");
    std::string solution_file;
    bids->add_option("--tree", tree_file)->required()->check(CLI::ExistingFile);
    bids->add_option("--solution", solution_file)->required()->check(CLI::ExistingFile);

    auto* report = app.add_subcommand("report", "write every report of a solution");
    report->add_option("--tree", tree_file)->required()->check(CLI::ExistingFile);
    report->add_option("--solution", solution_file)->required()->check(CLI::ExistingFile);

    auto* pipeline = app.add_subcommand("pipeline", "run every configured day");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // CLI11 codes (106 etc.) fold into usage errors
    }

    if (ingest->parsed()) {
        if (fetch) {
            auto client = ecm::RenewablesClient::from_environment();
            const auto wind = client.fetch(lat, lon, year, 1.0, ecm::RenewableKind::Wind);
            const auto pv = client.fetch(lat, lon, year, 1.0, ecm::RenewableKind::Pv);
            const fs::path path = renewables.empty() ? out_dir(g) / ("renewables_" + std::to_string(year) + ".csv")
                                                     : fs::path(renewables);
            write_renewables_csv(path, year, wind, pv);
            std::cerr << "wrote " << path.string() << " (" << wind.size() << " hours, UTC)\n";
            return 0;
        }
        if (prices.empty() || renewables.empty()) {
            const ecm::RunConfig cfg = load_config(g);
            if (prices.empty())
                prices = cfg.price_file.string();
            if (renewables.empty())
                renewables = cfg.renewable_file.string();
        }
        const auto load = ecm::load_history(prices, renewables);
        for (const auto& w : load.warnings)
            std::cerr << "warning: " << w << '\n';
        std::cout << load.window.days.size() << " complete days from " << ecm::format_date(load.window.first())
                  << " to " << ecm::format_date(load.window.last()) << '\n';
        return 0;
    }

    if (pipeline->parsed()) {
        const ecm::RunConfig cfg = load_config(g);
        const auto result = ecm::run_pipeline(cfg, out_dir(g), std::cerr);
        int failed = 0;
        for (const auto& d : result.days)
            failed += !d.ok;
        std::cerr << result.days.size() - failed << " of " << result.days.size() << " days solved\n";
        return failed ? 1 : 0;
    }

    const ecm::RunConfig cfg = load_config(g);

    if (fan_cmd->parsed() || tree_cmd->parsed()) {
        const ecm::SolvePlan plan = ecm::plan_solve(cfg);
        if (!plan.note.empty())
            std::cerr << "note: " << plan.note << '\n';
        ecm::ScenarioFan fan;
        if (!fan_file.empty()) {
            fan = fan_from_tree(ecm::read_tree(fan_file));
        } else {
            if (date.empty())
                throw CLI::RequiredError("--date or --fan");
            const auto history = ecm::load_history(cfg.price_file, cfg.renewable_file);
            fan = ecm::day_fan(cfg, plan, history.window, ecm::parse_date(date));
        }
        if (fan_cmd->parsed()) {
            const fs::path path = out_dir(g) / "fan.json";
            ecm::write_tree(fan.to_tree(), path);
            std::cerr << "wrote " << path.string() << " (" << fan.size() << " scenarios)\n";
        } else {
            const ecm::ScenarioTree tree = ecm::day_tree(plan, fan);
            const fs::path path = out_dir(g) / "tree.json";
            ecm::write_tree(tree, path);
            std::cerr << "wrote " << path.string() << " (" << tree.scenario_count() << " scenarios)\n";
        }
        return 0;
    }

    const ecm::ScenarioTree tree = ecm::read_tree(tree_file);
    const Inputs in = inputs_for(cfg, tree);
    const ecm::MilpModel model = ecm::build_model(tree, in.assets, in.demand);
    const fs::path dir = out_dir(g);

    if (build->parsed()) {
        ecm::write_mps(model, dir / "model.mps", "ECM");
        ecm::write_json_file(ecm::registry_to_json(model), dir / "registry.json");
        if (lp) {
            std::ofstream out(dir / "model.lp", std::ios::binary);
            ecm::write_lp(model, out);
        }
        std::cerr << model.variable_count() << " columns (" << model.binary_count() << " binary), "
                  << model.row_count() << " rows\n";
        return 0;
    }

    if (solve->parsed()) {
        ecm::SolvePlan plan = ecm::plan_solve(cfg);
        if (!plan.external)
            std::cerr << "note: " << plan.note << '\n';
        const ecm::Solution sol = ecm::solve_model(model, cfg, plan, dir / "solver");
        ecm::write_json_file(ecm::solution_to_json(model, sol), dir / "solution.json");
        std::cerr << ecm::status_name(sol.status) << ", objective " << sol.objective << " (" << sol.solver << ", "
                  << sol.wall_time << " s)\n";
        return sol.status == ecm::SolveStatus::Optimal ? 0 : 1;
    }

    const ecm::Solution sol = ecm::solution_from_json(ecm::read_json_file(solution_file), model);
    if (!sol.has_values())
        throw std::runtime_error(std::string("solution has no values (status ") + ecm::status_name(sol.status) + ")");

    if (bids->parsed()) {
        std::vector<ecm::BidCurve> curves;
        for (int h = 0; h < tree.schedule().hours; ++h)
            curves.push_back(ecm::extract_da_curve(model, sol.values, tree, h));
        std::ofstream a(dir / "da_bids.csv", std::ios::binary), b(dir / "da_bids_step.csv", std::ios::binary),
            c(dir / "price_accepting.csv", std::ios::binary);
        ecm::write_curves_csv(a, curves, false);
        ecm::write_curves_csv(b, curves, true);
        ecm::write_price_accepting_csv(c, ecm::price_accepting_bids(model, sol.values, tree));
        int bad = 0;
        for (const auto& curve : curves)
            if (!ecm::check_curve(curve).ok()) {
                std::cerr << "hour " << curve.hour + 1 << ": curve is not monotone\n";
                ++bad;
            }
        return bad ? 1 : 0;
    }

    if (report->parsed()) {
        double residual = 0;
        const auto dec = ecm::write_day_reports(dir, model, sol, tree, in.demand, &residual);
        std::cout << ecm::decomposition_to_json(dec).dump(2) << '\n';
        return 0;
    }
    return 2;
}

} // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
