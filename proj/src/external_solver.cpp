#include "ecm/solver.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>
#include <csignal>
#include <cstdio>
#include <fcntl.h>
#include <fstream>
#include <random>
#include <spawn.h>
#include <sstream>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>
#include <unordered_map>

extern char** environ;

namespace ecm {

const char* status_name(SolveStatus s)
{
    switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::Limit: return "limit";
    }
    return "?";
}

SolutionFormat parse_solution_format(const std::string& name)
{
    if (name == "highs" || name == "highs-raw")
        return SolutionFormat::HighsRaw;
    if (name == "cbc")
        return SolutionFormat::Cbc;
    throw std::invalid_argument("unknown solution format '" + name + "' (expected highs or cbc)");
}

namespace {

std::unordered_map<std::string, int> column_lookup(const MilpModel& model)
{
    std::unordered_map<std::string, int> ids;
    for (std::size_t j = 0; j < model.variable_count(); ++j)
        ids.emplace(MilpModel::column_name(static_cast<int>(j)), static_cast<int>(j));
    return ids;
}

double to_double(const std::string& s)
{
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size())
        throw SolverError("unparseable number in solution file: '" + s + "'");
    return v;
}

// Objective as read from a file is that of the exported (minimizing) model.
void finish(Solution& sol, const MilpModel& model, bool have_objective, double file_objective)
{
    if (!sol.has_values())
        return;
    const double recomputed = model.evaluate_objective(sol.values);
    if (have_objective) {
        const double reported = model.maximize() ? -file_objective : file_objective;
        if (sol.status == SolveStatus::Optimal &&
            std::fabs(reported - recomputed) > 1e-6 * std::max(1.0, std::fabs(recomputed)))
            throw SolverError("solver objective " + std::to_string(reported) +
                              " disagrees with the objective of its own solution " + std::to_string(recomputed));
    }
    sol.objective = recomputed;
}

} // namespace

Solution parse_highs_solution(std::istream& in, const MilpModel& model)
{
    Solution sol;
    sol.solver = "highs";
    std::string line;
    auto next = [&]() -> bool {
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (!line.empty())
                return true;
        }
        return false;
    };
    if (!next() || line != "Model status" || !next())
        throw SolverError("not a HiGHS raw solution file");
    const std::string status = line;
    if (status == "Optimal")
        sol.status = SolveStatus::Optimal;
    else if (status == "Infeasible")
        sol.status = SolveStatus::Infeasible;
    else if (status == "Unbounded" || status == "Primal infeasible or unbounded")
        sol.status = status == "Unbounded" ? SolveStatus::Unbounded : SolveStatus::Infeasible;
    else if (status.find("limit") != std::string::npos || status == "Interrupted by user")
        sol.status = SolveStatus::Limit;
    else
        throw SolverError("HiGHS reported model status '" + status + "'");
    sol.message = status;

    bool have_obj = false;
    double obj = 0.0;
    while (next()) {
        if (line == "# Primal solution values") {
            if (!next())
                break;
            if (line != "Feasible")
                break;   // "None" or "Infeasible": no usable point
            if (!next() || line.rfind("Objective ", 0) != 0)
                throw SolverError("HiGHS solution: missing objective line");
            obj = to_double(line.substr(10));
            have_obj = true;
            if (!next() || line.rfind("# Columns ", 0) != 0)
                throw SolverError("HiGHS solution: missing column block");
            const long count = std::stol(line.substr(10));
            if (count != static_cast<long>(model.variable_count()))
                throw SolverError("HiGHS solution has " + std::to_string(count) + " columns, model has " +
                                  std::to_string(model.variable_count()));
            const auto ids = column_lookup(model);
            sol.values.assign(model.variable_count(), 0.0);
            std::vector<bool> seen(model.variable_count(), false);
            for (long k = 0; k < count; ++k) {
                if (!next())
                    throw SolverError("HiGHS solution: truncated column block");
                std::istringstream ss(line);
                std::string name, value;
                ss >> name >> value;
                auto it = ids.find(name);
                if (it == ids.end())
                    throw SolverError("HiGHS solution: unknown column " + name);
                sol.values[it->second] = to_double(value);
                seen[it->second] = true;
            }
            for (bool s : seen)
                if (!s)
                    throw SolverError("HiGHS solution: missing columns");
            break;
        }
    }
    if (sol.status == SolveStatus::Optimal && !sol.has_values())
        throw SolverError("HiGHS reported optimal without primal values");
    finish(sol, model, have_obj, obj);
    return sol;
}

Solution parse_cbc_solution(std::istream& in, const MilpModel& model)
{
    Solution sol;
    sol.solver = "cbc";
    std::string header;
    if (!std::getline(in, header))
        throw SolverError("empty CBC solution file");
    sol.message = header;
    auto starts = [&](const char* p) { return header.rfind(p, 0) == 0; };
    if (starts("Optimal"))
        sol.status = SolveStatus::Optimal;
    else if (starts("Infeasible") || starts("Integer infeasible"))
        sol.status = SolveStatus::Infeasible;
    else if (starts("Unbounded"))
        sol.status = SolveStatus::Unbounded;
    else if (starts("Stopped"))
        sol.status = SolveStatus::Limit;
    else
        throw SolverError("unrecognised CBC status line '" + header + "'");

    bool have_obj = false;
    double obj = 0.0;
    if (auto pos = header.find("objective value"); pos != std::string::npos) {
        obj = to_double([&] {
            std::istringstream ss(header.substr(pos + 15));
            std::string v;
            ss >> v;
            return v;
        }());
        have_obj = true;
    }
    if (sol.status != SolveStatus::Optimal && sol.status != SolveStatus::Limit)
        return sol;

    // CBC lists only nonzero columns: "index name value reduced-cost", with an
    // optional "**" marker in front of infeasible entries.
    const auto ids = column_lookup(model);
    sol.values.assign(model.variable_count(), 0.0);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::vector<std::string> tok;
        for (std::string t; ss >> t;)
            tok.push_back(t);
        if (!tok.empty() && tok[0] == "**")
            tok.erase(tok.begin());
        if (tok.size() < 3)
            continue;
        auto it = ids.find(tok[1]);
        if (it == ids.end())
            continue;   // row activities share the format in some builds
        sol.values[it->second] = to_double(tok[2]);
    }
    // CBC prints 8 significant digits; its objective is compared loosely.
    if (have_obj && sol.status == SolveStatus::Optimal) {
        const double reported = model.maximize() ? -obj : obj;
        const double recomputed = model.evaluate_objective(sol.values);
        if (std::fabs(reported - recomputed) > 1e-5 * std::max(1.0, std::fabs(recomputed)))
            throw SolverError("CBC objective disagrees with its solution");
    }
    finish(sol, model, false, 0.0);
    return sol;
}

namespace {

std::string substitute(std::string s, const std::string& key, const std::string& value)
{
    for (std::size_t pos = 0; (pos = s.find(key, pos)) != std::string::npos; pos += value.size())
        s.replace(pos, key.size(), value);
    return s;
}

std::string shell_quote(const std::string& s)
{
    std::string q = "'";
    for (char c : s)
        q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
}

std::string tail(const std::filesystem::path& path, std::size_t bytes)
{
    std::ifstream in(path, std::ios::binary);
    std::string s((std::istreambuf_iterator<char>(in)), {});
    return s.size() > bytes ? s.substr(s.size() - bytes) : s;
}

// Runs `cmd` via /bin/sh with output to `log`; returns the exit status or
// throws on timeout.
int run_command(const std::string& cmd, const std::filesystem::path& log, double timeout)
{
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
    posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    const char* argv[] = {"/bin/sh", "-c", cmd.c_str(), nullptr};
    pid_t pid = 0;
    const int rc = posix_spawn(&pid, "/bin/sh", &actions, &attr, const_cast<char* const*>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    if (rc != 0)
        throw SolverError("cannot start solver: " + std::string(std::strerror(rc)));

    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout);
    int status = 0;
    for (auto wait = std::chrono::milliseconds(2);; wait = std::min(wait * 2, std::chrono::milliseconds(100))) {
        const pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid)
            break;
        if (r < 0 && errno != EINTR)
            throw SolverError("waitpid failed");
        if (std::chrono::steady_clock::now() > deadline) {
            kill(-pid, SIGKILL);
            waitpid(pid, &status, 0);
            throw SolverError("solver timed out after " + std::to_string(timeout) + " s");
        }
        std::this_thread::sleep_for(wait);
    }
    if (WIFEXITED(status))
        return WEXITSTATUS(status);
    return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

std::filesystem::path fresh_temp_dir()
{
    std::random_device rd;
    for (int attempt = 0; attempt < 100; ++attempt) {
        char name[32];
        std::snprintf(name, sizeof name, "ecm-solve-%08x", rd());
        auto p = std::filesystem::temp_directory_path() / name;
        if (std::filesystem::create_directory(p))
            return p;
    }
    throw SolverError("cannot create a temporary directory");
}

} // namespace

Solution solve_external(const MilpModel& model, const ExternalSolver& solver)
{
    if (solver.command.empty())
        throw SolverError("no solver command configured");
    const bool temporary = solver.work_dir.empty();
    const auto dir = temporary ? fresh_temp_dir() : solver.work_dir;
    std::filesystem::create_directories(dir);
    struct Cleanup {
        bool active;
        std::filesystem::path dir;
        ~Cleanup()
        {
            std::error_code ec;
            if (active)
                std::filesystem::remove_all(dir, ec);
        }
    } cleanup{temporary, dir};

    const auto mps = dir / (solver.stem + ".mps");
    const auto sol = dir / (solver.stem + ".sol");
    const auto log = dir / (solver.stem + ".solver.log");
    std::filesystem::remove(sol);
    write_mps(model, mps);

    char limit[32];
    std::snprintf(limit, sizeof limit, "%g", solver.time_limit);
    std::string cmd = substitute(solver.command, "{mps}", shell_quote(mps.string()));
    cmd = substitute(cmd, "{sol}", shell_quote(sol.string()));
    cmd = substitute(cmd, "{time_limit}", limit);

    const auto start = std::chrono::steady_clock::now();
    const int rc = run_command(cmd, log, solver.time_limit + solver.kill_after);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (rc != 0)
        throw SolverError("solver exited with status " + std::to_string(rc) + ":\n" + tail(log, 2000));

    std::ifstream in(sol, std::ios::binary);
    if (!in)
        throw SolverError("solver wrote no solution file:\n" + tail(log, 2000));
    Solution s = solver.format == SolutionFormat::HighsRaw ? parse_highs_solution(in, model)
                                                            : parse_cbc_solution(in, model);
    s.wall_time = elapsed;
    // The adapter reports the final gap on a line "mip_gap <value>".
    std::ifstream lg(log);
    for (std::string line; std::getline(lg, line);)
        if (line.rfind("mip_gap ", 0) == 0)
            s.gap = to_double(line.substr(8));
    return s;
}

ResidualReport check_solution(const MilpModel& model, const std::vector<double>& values, double tol)
{
    if (values.size() != model.variable_count())
        throw std::invalid_argument("solution has " + std::to_string(values.size()) + " values, model " +
                                    std::to_string(model.variable_count()));
    ResidualReport rep;
    for (const auto& [family, ids] : model.families())
        rep.family_max[family] = 0.0;
    const auto& rows = model.rows();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double a = model.row_activity(static_cast<int>(r), values);
        const double rhs = rows[r].rhs;
        double v = 0.0;
        switch (rows[r].sense) {
        case RowSense::LessEqual: v = std::max(0.0, a - rhs); break;
        case RowSense::GreaterEqual: v = std::max(0.0, rhs - a); break;
        case RowSense::Equal: v = std::fabs(a - rhs); break;
        }
        auto& fam = rep.family_max[rows[r].family];
        fam = std::max(fam, v);
        rep.max_residual = std::max(rep.max_residual, v);
        if (v > tol)
            rep.violated_rows.push_back(static_cast<int>(r));
    }
    for (std::size_t j = 0; j < values.size(); ++j) {
        const auto& var = model.variable(static_cast<int>(j));
        const double x = values[j];
        if (!std::isfinite(x) || x < var.lower - tol || x > var.upper + tol)
            rep.bound_violations.push_back(static_cast<int>(j));
        if (var.kind == VarKind::Binary && std::min(std::fabs(x), std::fabs(x - 1.0)) > tol)
            rep.integrality_violations.push_back(static_cast<int>(j));
    }
    return rep;
}

} // namespace ecm
