#pragma once

#include "ecm/milp_model.hpp"

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecm {

enum class SolveStatus { Optimal, Infeasible, Unbounded, Limit };
const char* status_name(SolveStatus s);

struct Solution {
    SolveStatus status = SolveStatus::Infeasible;
    std::vector<double> values;   // indexed by variable id; empty without a primal point
    double objective = 0.0;       // in the model's own sense
    double wall_time = 0.0;       // seconds
    double gap = 0.0;             // relative MIP gap when known
    std::string solver;
    std::string message;

    bool has_values() const { return !values.empty(); }
};

/// Thrown for failures that leave no usable status: solver crashed, timed
/// out, wrote garbage, or the reference solver hit its size guard.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// MPS export. Column and row names are the registry names (C0000000,
// R0000000), numbers are fitted to the 12-character fixed fields. A
// maximizing objective is written negated and flagged in a comment line so
// read_mps can restore it.
void write_mps(const MilpModel& model, std::ostream& out, const std::string& name = "ECM");
void write_mps(const MilpModel& model, const std::filesystem::path& path, const std::string& name = "ECM");

/// Reads fixed or free MPS (no RANGES). Columns get keys named after their
/// MPS names, rows land in family "mps".
MilpModel read_mps(std::istream& in);
MilpModel read_mps(const std::filesystem::path& path);

/// CPLEX-LP rendering, for eyeballing small models.
void write_lp(const MilpModel& model, std::ostream& out);

enum class SolutionFormat { HighsRaw, Cbc };
SolutionFormat parse_solution_format(const std::string& name);

Solution parse_highs_solution(std::istream& in, const MilpModel& model);
Solution parse_cbc_solution(std::istream& in, const MilpModel& model);

/// External solver invocation. `command` is run through /bin/sh after
/// substituting {mps}, {sol} and {time_limit}.
struct ExternalSolver {
    std::string command;
    SolutionFormat format = SolutionFormat::HighsRaw;
    double time_limit = 600.0;                // seconds, passed to the solver
    double kill_after = 60.0;                 // grace beyond time_limit before the process is killed
    std::filesystem::path work_dir;           // empty: a fresh temporary directory, removed afterwards
    std::string stem = "model";
};

Solution solve_external(const MilpModel& model, const ExternalSolver& solver);

struct ReferenceLimits {
    std::size_t max_binaries = 30;
    std::size_t max_continuous = 2000;
    long max_nodes = 1'000'000;
};

/// Exact branch-and-bound over a dense bounded simplex. Throws SolverError
/// when the model exceeds the limits.
Solution solve_reference(const MilpModel& model, const ReferenceLimits& limits = {});

struct ResidualReport {
    std::map<std::string, double> family_max;   // worst row violation per family
    double max_residual = 0.0;
    std::vector<int> violated_rows;             // residual > tol
    std::vector<int> bound_violations;          // variable ids
    std::vector<int> integrality_violations;    // binary ids farther than tol from {0,1}

    bool ok() const { return violated_rows.empty() && bound_violations.empty() && integrality_violations.empty(); }
};

/// Row residual is the amount by which the row is violated (0 when satisfied).
ResidualReport check_solution(const MilpModel& model, const std::vector<double>& values, double tol = 1e-7);

} // namespace ecm
