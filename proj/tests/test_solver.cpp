#include "ecm/model_builder.hpp"
#include "ecm/solver.hpp"

#include "support.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace ecm;

namespace {

// max x + y  s.t.  x + 2y <= 4,  3x + y <= 6
MilpModel small_lp()
{
    MilpModel m;
    const int x = m.add_variable({"x"}, 0, kInf);
    const int y = m.add_variable({"y"}, 0, kInf);
    m.add_row("a", {{x, 1}, {y, 2}}, RowSense::LessEqual, 4);
    m.add_row("b", {{x, 3}, {y, 1}}, RowSense::LessEqual, 6);
    m.set_objective({{x, 1}, {y, 1}}, true);
    return m;
}

std::string mps_text(const MilpModel& m)
{
    std::ostringstream out;
    write_mps(m, out);
    return out.str();
}

void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

const char* kHighsOptimal = R"(Model status
Optimal

# Primal solution values
Feasible
Objective -2.8
# Columns 2
C0000000 1.6
C0000001 1.2
# Rows 2
R0000000 4
R0000001 6

# Dual solution values
None
)";

} // namespace

TEST_CASE("MPS export")
{
    const auto text = mps_text(small_lp());
    for (const char* section : {"NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"})
        CHECK(text.find(section) != std::string::npos);
    // maximization is exported negated, with a marker comment
    CHECK(text.find("* ecm: objective negated") != std::string::npos);
    CHECK(text.find("OBJ       -1") != std::string::npos);
    CHECK(text.find(" L  R0000000") != std::string::npos);

    MilpModel b;
    b.add_variable({"b"}, 0, 1, VarKind::Binary);
    b.add_row("r", {{0, 1}}, RowSense::LessEqual, 0.5);
    b.set_objective({{0, 1}}, true);
    CHECK(mps_text(b).find(" BV BND") != std::string::npos);
}

TEST_CASE("MPS export is deterministic and round-trips")
{
    std::mt19937_64 rng(21);
    const auto inst = testing::random_instance(rng, 3, 2);
    const auto model = build_model(inst.tree, inst.config, inst.demand);
    const auto text = mps_text(model);
    CHECK(text == mps_text(build_model(inst.tree, inst.config, inst.demand)));
    for (std::istringstream line_in(text); !line_in.eof();) {
        std::string line;
        std::getline(line_in, line);
        // fixed fields: nothing past column 61
        if (!line.empty() && line[0] == ' ')
            CHECK(line.size() <= 61);
    }

    std::istringstream in(text);
    const auto back = read_mps(in);
    REQUIRE(back.variable_count() == model.variable_count());
    REQUIRE(back.row_count() == model.row_count());
    CHECK(back.maximize());
    CHECK(back.binary_count() == model.binary_count());
    // same objective and row activities on a random point, up to 12-character rounding
    std::uniform_real_distribution<double> u(0, 3);
    std::vector<double> x(model.variable_count());
    for (auto& v : x)
        v = u(rng);
    CHECK(back.evaluate_objective(x) == doctest::Approx(model.evaluate_objective(x)).epsilon(1e-9));
    for (std::size_t r = 0; r < model.row_count(); ++r) {
        CHECK(back.rows()[r].sense == model.rows()[r].sense);
        CHECK(back.rows()[r].rhs == doctest::Approx(model.rows()[r].rhs).epsilon(1e-9));
        CHECK(back.row_activity(static_cast<int>(r), x) ==
              doctest::Approx(model.row_activity(static_cast<int>(r), x)).epsilon(1e-9));
    }
    for (std::size_t j = 0; j < model.variable_count(); ++j) {
        CHECK(back.variable(static_cast<int>(j)).lower == model.variable(static_cast<int>(j)).lower);
        const double u = model.variable(static_cast<int>(j)).upper;
        if (std::isinf(u))
            CHECK(std::isinf(back.variable(static_cast<int>(j)).upper));
        else
            CHECK(back.variable(static_cast<int>(j)).upper == doctest::Approx(u).epsilon(1e-9));
    }
}

TEST_CASE("reference solver")
{
    SUBCASE("vertex optimum")
    {
        const auto s = solve_reference(small_lp());
        REQUIRE(s.status == SolveStatus::Optimal);
        CHECK(s.objective == doctest::Approx(2.8).epsilon(1e-12));
        CHECK(s.values[0] == doctest::Approx(1.6).epsilon(1e-12));
        CHECK(s.values[1] == doctest::Approx(1.2).epsilon(1e-12));
    }
    SUBCASE("binary rounded down by branching")
    {
        MilpModel m;
        m.add_variable({"b"}, 0, 1, VarKind::Binary);
        m.add_row("r", {{0, 1}}, RowSense::LessEqual, 0.5);
        m.set_objective({{0, 1}}, true);
        const auto s = solve_reference(m);
        REQUIRE(s.status == SolveStatus::Optimal);
        CHECK(s.values[0] == 0.0);
        CHECK(s.objective == 0.0);
    }
    SUBCASE("infeasible")
    {
        MilpModel m;
        m.add_variable({"x"}, 0, 1);
        m.add_row("r", {{0, 1}}, RowSense::GreaterEqual, 2);
        m.set_objective({{0, 1}}, true);
        CHECK(solve_reference(m).status == SolveStatus::Infeasible);
    }
    SUBCASE("unbounded")
    {
        MilpModel m;
        m.add_variable({"x"}, 0, kInf);
        m.add_variable({"y"}, 0, kInf);
        m.add_row("r", {{0, 1}, {1, -1}}, RowSense::LessEqual, 1);
        m.set_objective({{0, 1}}, true);
        CHECK(solve_reference(m).status == SolveStatus::Unbounded);
    }
    SUBCASE("size guard")
    {
        MilpModel m;
        for (int j = 0; j < 5; ++j)
            m.add_variable({"b", j}, 0, 1, VarKind::Binary);
        m.set_objective({{0, 1}}, true);
        CHECK_THROWS_AS(solve_reference(m, {4, 100, 1000}), SolverError);
    }
}

TEST_CASE("check_solution")
{
    std::mt19937_64 rng(4);
    const auto inst = testing::random_instance(rng, 2, 2);
    const auto model = build_model(inst.tree, inst.config, inst.demand);
    const auto sol = solve_reference(model, {60, 2000, 1'000'000});
    REQUIRE(sol.has_values());
    const auto exact = check_solution(model, sol.values);
    CHECK(exact.ok());
    CHECK(exact.max_residual <= 1e-9);

    // nudging one column can only break rows that contain it
    std::uniform_int_distribution<int> pick(0, static_cast<int>(model.variable_count()) - 1);
    for (int trial = 0; trial < 30; ++trial) {
        const int j = pick(rng);
        auto x = sol.values;
        x[j] += 1e-3;
        const auto rep = check_solution(model, x);
        for (int r : rep.violated_rows) {
            bool touches = false;
            for (const auto& t : model.rows()[r].terms)
                touches |= t.var == j && t.coef != 0;
            CHECK(touches);
        }
        for (std::size_t r = 0; r < model.row_count(); ++r) {
            const auto& row = model.rows()[r];
            double coef = 0;
            for (const auto& t : row.terms)
                if (t.var == j)
                    coef += t.coef;
            if (row.sense == RowSense::Equal && std::fabs(coef) * 1e-3 > 1e-7)
                CHECK(std::find(rep.violated_rows.begin(), rep.violated_rows.end(), static_cast<int>(r)) !=
                      rep.violated_rows.end());
        }
    }

    auto x = sol.values;
    const int b = model.id({"id", 0, 0, -1});
    x[b] = 0.4;
    const auto rep = check_solution(model, x);
    CHECK(rep.integrality_violations == std::vector<int>{b});
    CHECK_THROWS_AS(check_solution(model, std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST_CASE("solution file parsing")
{
    const auto model = small_lp();
    SUBCASE("HiGHS raw")
    {
        std::istringstream in(kHighsOptimal);
        const auto s = parse_highs_solution(in, model);
        CHECK(s.status == SolveStatus::Optimal);
        CHECK(s.objective == doctest::Approx(2.8));
        CHECK(s.values == std::vector<double>{1.6, 1.2});
    }
    SUBCASE("HiGHS objective must match its point")
    {
        std::string text = kHighsOptimal;
        text.replace(text.find("-2.8"), 4, "-3.5");
        std::istringstream in(text);
        CHECK_THROWS_AS(parse_highs_solution(in, model), SolverError);
    }
    SUBCASE("HiGHS infeasible")
    {
        std::istringstream in("Model status\nInfeasible\n\n# Primal solution values\nNone\n");
        const auto s = parse_highs_solution(in, model);
        CHECK(s.status == SolveStatus::Infeasible);
        CHECK_FALSE(s.has_values());
    }
    SUBCASE("HiGHS garbage")
    {
        std::istringstream in("hello\n");
        CHECK_THROWS_AS(parse_highs_solution(in, model), SolverError);
        std::istringstream wrong_count("Model status\nOptimal\n\n# Primal solution values\nFeasible\nObjective -2.8\n"
                                       "# Columns 3\n");
        CHECK_THROWS_AS(parse_highs_solution(wrong_count, model), SolverError);
    }
    SUBCASE("CBC")
    {
        std::istringstream in("Optimal - objective value -2.80000000\n"
                              "      0 C0000000               1.6                       0\n"
                              "      1 C0000001               1.2                       0\n");
        const auto s = parse_cbc_solution(in, model);
        CHECK(s.status == SolveStatus::Optimal);
        CHECK(s.values == std::vector<double>{1.6, 1.2});
        std::istringstream inf("Infeasible - objective value 0.00000000\n");
        CHECK(parse_cbc_solution(inf, model).status == SolveStatus::Infeasible);
    }
    CHECK(parse_solution_format("highs") == SolutionFormat::HighsRaw);
    CHECK(parse_solution_format("cbc") == SolutionFormat::Cbc);
    CHECK_THROWS_AS(parse_solution_format("gurobi"), std::invalid_argument);
}

TEST_CASE("external solver process")
{
    testing::TempDir dir("ext");
    const auto model = small_lp();

    SUBCASE("a script that copies a canned solution")
    {
        write_file(dir / "canned.sol", kHighsOptimal);
        ExternalSolver ext;
        ext.command = "test -s {mps} && cp '" + (dir / "canned.sol").string() + "' {sol} && echo mip_gap 0.001";
        ext.work_dir = dir / "work";
        const auto s = solve_external(model, ext);
        CHECK(s.status == SolveStatus::Optimal);
        CHECK(s.objective == doctest::Approx(2.8));
        CHECK(s.gap == doctest::Approx(0.001));
        CHECK(std::filesystem::exists(dir / "work" / "model.mps"));
    }
    SUBCASE("nonzero exit")
    {
        ExternalSolver ext;
        ext.command = "echo broken; exit 3";
        try {
            solve_external(model, ext);
            FAIL("expected SolverError");
        } catch (const SolverError& e) {
            CHECK(std::string(e.what()).find("status 3") != std::string::npos);
            CHECK(std::string(e.what()).find("broken") != std::string::npos);
        }
    }
    SUBCASE("no solution file")
    {
        ExternalSolver ext;
        ext.command = "true";
        CHECK_THROWS_AS(solve_external(model, ext), SolverError);
    }
    SUBCASE("runaway solver is killed")
    {
        ExternalSolver ext;
        ext.command = "sleep 30";
        ext.time_limit = 0.2;
        ext.kill_after = 0.3;
        const auto start = std::chrono::steady_clock::now();
        CHECK_THROWS_WITH_AS(solve_external(model, ext), doctest::Contains("timed out"), SolverError);
        CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(5));
    }
}

TEST_CASE("HiGHS agrees with the reference solver" * doctest::skip(!testing::external_command()))
{
    ExternalSolver ext;
    ext.command = testing::external_command().value_or("");
    ext.time_limit = 60;
    const auto lp = solve_external(small_lp(), ext);
    REQUIRE(lp.status == SolveStatus::Optimal);
    CHECK(lp.objective == doctest::Approx(2.8).epsilon(1e-9));

    std::mt19937_64 rng(31);
    for (int k = 0; k < 3; ++k) {
        const auto inst = testing::random_instance(rng, 2, 2);
        const auto model = build_model(inst.tree, inst.config, inst.demand);
        const auto ref = solve_reference(model, {60, 2000, 1'000'000});
        const auto hs = solve_external(model, ext);
        REQUIRE(ref.status == hs.status);
        if (ref.status == SolveStatus::Optimal)
            CHECK(hs.objective == doctest::Approx(ref.objective).epsilon(1e-6));
    }
}
