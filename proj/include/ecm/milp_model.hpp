#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace ecm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Continuous, Binary };
enum class RowSense { LessEqual, Equal, GreaterEqual };

struct Term {
    int var = 0;
    double coef = 0.0;
};

struct Variable {
    double lower = 0.0;
    double upper = kInf;
    VarKind kind = VarKind::Continuous;
};

struct Row {
    std::vector<Term> terms;
    RowSense sense = RowSense::LessEqual;
    double rhs = 0.0;
    std::string family;
};

/// Model symbol with its indices. Unused indices are -1; `hour` is 0-based
/// and `market` indexes the schedule's market list.
struct SymbolKey {
    std::string symbol;
    int hour = -1;
    int scenario = -1;
    int market = -1;

    auto operator<=>(const SymbolKey&) const = default;
    std::string to_string() const;
};

/// Canonical mixed-integer linear program with a bijective registry between
/// columns and model symbols, and row ids grouped by constraint family.
class MilpModel {
public:
    int add_variable(SymbolKey key, double lower, double upper, VarKind kind = VarKind::Continuous);
    int add_row(std::string family, std::vector<Term> terms, RowSense sense, double rhs);

    void set_objective(std::vector<Term> terms, bool maximize);

    std::size_t variable_count() const { return vars_.size(); }
    std::size_t row_count() const { return rows_.size(); }
    std::size_t binary_count() const;

    const Variable& variable(int id) const { return vars_.at(static_cast<std::size_t>(id)); }
    Variable& variable(int id) { return vars_.at(static_cast<std::size_t>(id)); }
    const std::vector<Variable>& variables() const { return vars_; }
    const std::vector<Row>& rows() const { return rows_; }
    const std::vector<Term>& objective() const { return objective_; }
    bool maximize() const { return maximize_; }

    /// Variable id for a key; throws std::out_of_range if absent.
    int id(const SymbolKey& key) const;
    /// Variable id for a key, or -1.
    int find(const SymbolKey& key) const;
    const SymbolKey& key(int id) const { return keys_.at(static_cast<std::size_t>(id)); }

    const std::map<std::string, std::vector<int>>& families() const { return families_; }
    std::vector<int> family_rows(const std::string& family) const;

    /// Fixed-width column and row names used in exported files.
    static std::string column_name(int id);
    static std::string row_name(int id);

    /// Objective value of a full assignment.
    double evaluate_objective(const std::vector<double>& values) const;
    /// Left-hand side of a row.
    double row_activity(int row, const std::vector<double>& values) const;

private:
    std::vector<Variable> vars_;
    std::vector<SymbolKey> keys_;
    std::map<SymbolKey, int> index_;
    std::vector<Row> rows_;
    std::map<std::string, std::vector<int>> families_;
    std::vector<Term> objective_;
    bool maximize_ = true;
};

} // namespace ecm
