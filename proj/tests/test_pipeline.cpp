#include "ecm/model_builder.hpp"
#include "ecm/pipeline.hpp"
#include "ecm/tree_io.hpp"

#include "support.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace ecm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kData = fs::path(ECM_SOURCE_DIR) / "data" / "synthetic";

json reference_config()
{
    return json::parse(std::ifstream(kData / "december_reference.json"));
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_CASE("run configuration parsing")
{
    const auto cfg = run_config_from_json(reference_config(), kData);
    CHECK(cfg.days.size() == 31);
    CHECK(format_date(cfg.days.front()) == "2023-12-01");
    CHECK(format_date(cfg.days.back()) == "2023-12-31");
    CHECK(cfg.solver.mode == SolverMode::Reference);
    CHECK(cfg.fan_size == 200);
    CHECK(cfg.seed == 2023);
    CHECK(cfg.demand.hours() == 24);
    CHECK(cfg.assets.ib_cap_fraction == 0.5);
    REQUIRE(cfg.demand.intervals.size() == 2);
    CHECK(cfg.demand.intervals[0].first == 0);
    CHECK(cfg.demand.intervals[0].last == 7);
    CHECK(cfg.demand.intervals[1].last == 23);
    CHECK(cfg.price_file == kData / "prices_2023.csv");

    SUBCASE("unknown sections are rejected")
    {
        auto doc = reference_config();
        doc["solvr"] = json::object();
        CHECK_THROWS_WITH_AS(run_config_from_json(doc, kData), doctest::Contains("solvr"), std::invalid_argument);
    }
    SUBCASE("day lists")
    {
        auto doc = reference_config();
        doc["days"] = {"2023-12-24", "2023-12-02"};
        const auto c = run_config_from_json(doc, kData);
        REQUIRE(c.days.size() == 2);
        CHECK(format_date(c.days[0]) == "2023-12-24");
        doc["days"] = json::array();
        CHECK_THROWS_AS(run_config_from_json(doc, kData), std::invalid_argument);
    }
    SUBCASE("config_dir expands in the solver command")
    {
        auto doc = reference_config();
        doc["solver"] = {{"mode", "auto"}, {"command", "{config_dir}/solve {mps} {sol}"}};
        CHECK(run_config_from_json(doc, kData).solver.command == kData.string() + "/solve {mps} {sol}");
        doc["solver"]["mode"] = "sometimes";
        CHECK_THROWS_AS(run_config_from_json(doc, kData), std::invalid_argument);
    }
}

TEST_CASE("solve plans")
{
    auto cfg = run_config_from_json(reference_config(), kData);
    const auto ref = plan_solve(cfg);
    CHECK_FALSE(ref.external);
    CHECK(ref.schedule.hours == 3);
    CHECK(ref.demand.hours() == 3);
    CHECK(ref.reduction.max_leaves() <= 3);

    cfg.solver.mode = SolverMode::Auto;
    cfg.solver.command = "exit 1";
    const auto fallback = plan_solve(cfg);
    CHECK_FALSE(fallback.external);
    CHECK(fallback.note.find("unavailable") != std::string::npos);

    cfg.solver.mode = SolverMode::External;
    cfg.solver.command.clear();
    CHECK_THROWS_AS(plan_solve(cfg), std::invalid_argument);
}

TEST_CASE("per-day seeds")
{
    const Date a = parse_date("2023-12-01"), b = parse_date("2023-12-02");
    CHECK(day_seed(7, a) == day_seed(7, a));
    CHECK(day_seed(7, a) != day_seed(7, b));
    CHECK(day_seed(7, a) != day_seed(8, a));
}

TEST_CASE("summary CSV")
{
    DayResult ok;
    ok.date = parse_date("2023-12-01");
    ok.ok = true;
    ok.solver = "reference";
    ok.scenarios = 3;
    ok.decomposition = {10.5, 12, 1, 0, 0.5, 1, 2};
    ok.solve_seconds = 99;   // wall times stay out of the summary
    DayResult bad;
    bad.date = parse_date("2023-12-02");
    bad.solver = "reference";
    std::ostringstream out;
    write_summary_csv(out, {ok, bad});
    CHECK(out.str() == "date,status,solver,scenarios,eecsw,da,rm,im,ib_pos,ib_neg,fd\n"
                       "2023-12-01,ok,reference,3,10.500000,12.000000,1.000000,0.000000,0.500000,1.000000,2.000000\n"
                       "2023-12-02,failed,reference,0,,,,,,,\n");
}

TEST_CASE("one reference day end to end")
{
    testing::TempDir dir("pipe");
    auto doc = reference_config();
    doc["days"] = {"2023-12-05"};
    const auto cfg = run_config_from_json(doc, kData);
    std::ostringstream progress;
    const auto result = run_pipeline(cfg, dir.path(), progress);
    REQUIRE_MESSAGE(result.ok(), progress.str());
    const auto day = dir / "2023-12-05";
    for (const char* f : {"tree.json", "model.mps", "registry.json", "solution.json", "residuals.json", "da_bids.csv",
                          "da_bids_step.csv", "price_accepting.csv", "percentiles.csv", "decomposition.json",
                          "report.json", "day.log", "OK", "behaviour/scenario_000.csv"})
        CHECK_MESSAGE(fs::exists(day / f), f);
    CHECK(fs::exists(dir / "summary.csv"));
    CHECK(fs::exists(dir / "run.json"));

    // the stored artifacts reproduce the day
    const auto tree = read_tree(day / "tree.json");
    CHECK(tree.scenario_count() == result.days[0].scenarios);
    const auto model = build_model(tree, cfg.assets.truncated(3), cfg.demand.truncated(3));
    const auto sol = solution_from_json(read_json_file(day / "solution.json"), model);
    CHECK(check_solution(model, sol.values).ok());
    CHECK(testing::audit_nac(model, tree, sol.values).max_disagreement <= 1e-7);
    CHECK(model.evaluate_objective(sol.values) == doctest::Approx(result.days[0].decomposition.eecsw).epsilon(1e-9));
    std::ostringstream mps;
    write_mps(model, mps, "ECM");
    CHECK(mps.str() == slurp(day / "model.mps"));

    // a second run writes the same files
    testing::TempDir again("pipe2");
    std::ostringstream quiet;
    run_pipeline(cfg, again.path(), quiet);
    CHECK(slurp(dir / "summary.csv") == slurp(again / "summary.csv"));
    CHECK(slurp(day / "solution.json") == slurp(again / "2023-12-05" / "solution.json"));
}

TEST_CASE("a one-scenario fan gives the deterministic optimum")
{
    testing::TempDir dir("det");
    auto doc = reference_config();
    doc["days"] = {"2023-12-11"};
    doc["fan"]["size"] = 1;
    doc["reference_preset"]["children"] = {1};
    const auto cfg = run_config_from_json(doc, kData);
    const auto plan = plan_solve(cfg);
    const auto history = load_history(cfg.price_file, cfg.renewable_file);
    const auto fan = day_fan(cfg, plan, history.window, cfg.days[0]);
    REQUIRE(fan.size() == 1);

    // solve the single trajectory directly, as a one-scenario problem
    const auto single = ScenarioTree::fan(plan.schedule, {1.0}, {fan.scenarios[0]});
    const auto direct = solve_reference(build_model(single, plan.assets, plan.demand));
    REQUIRE(direct.status == SolveStatus::Optimal);

    std::ostringstream progress;
    const auto result = run_pipeline(cfg, dir.path(), progress);
    REQUIRE_MESSAGE(result.ok(), progress.str());
    CHECK(result.days[0].scenarios == 1);
    CHECK(result.days[0].decomposition.eecsw == doctest::Approx(direct.objective).epsilon(1e-9));
}
