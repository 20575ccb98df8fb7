#include "ecm/milp_model.hpp"

#include <cstdio>
#include <stdexcept>

namespace ecm {

std::string SymbolKey::to_string() const
{
    std::string s = symbol;
    if (market >= 0)
        s += "[i" + std::to_string(market + 1) + "]";
    if (hour >= 0)
        s += "[t" + std::to_string(hour + 1) + "]";
    if (scenario >= 0)
        s += "[w" + std::to_string(scenario) + "]";
    return s;
}

int MilpModel::add_variable(SymbolKey key, double lower, double upper, VarKind kind)
{
    if (lower > upper)
        throw std::invalid_argument("variable " + key.to_string() + " has lower > upper");
    const int id = static_cast<int>(vars_.size());
    if (!index_.emplace(key, id).second)
        throw std::invalid_argument("duplicate model symbol " + key.to_string());
    vars_.push_back({lower, upper, kind});
    keys_.push_back(std::move(key));
    return id;
}

int MilpModel::add_row(std::string family, std::vector<Term> terms, RowSense sense, double rhs)
{
    for (const auto& t : terms)
        if (t.var < 0 || t.var >= static_cast<int>(vars_.size()))
            throw std::out_of_range("row in family " + family + " references an unknown variable");
    const int id = static_cast<int>(rows_.size());
    families_[family].push_back(id);
    rows_.push_back({std::move(terms), sense, rhs, std::move(family)});
    return id;
}

void MilpModel::set_objective(std::vector<Term> terms, bool maximize)
{
    for (const auto& t : terms)
        if (t.var < 0 || t.var >= static_cast<int>(vars_.size()))
            throw std::out_of_range("objective references an unknown variable");
    objective_ = std::move(terms);
    maximize_ = maximize;
}

std::size_t MilpModel::binary_count() const
{
    std::size_t n = 0;
    for (const auto& v : vars_)
        n += v.kind == VarKind::Binary;
    return n;
}

int MilpModel::id(const SymbolKey& key) const
{
    auto it = index_.find(key);
    if (it == index_.end())
        throw std::out_of_range("no model symbol " + key.to_string());
    return it->second;
}

int MilpModel::find(const SymbolKey& key) const
{
    auto it = index_.find(key);
    return it == index_.end() ? -1 : it->second;
}

std::vector<int> MilpModel::family_rows(const std::string& family) const
{
    auto it = families_.find(family);
    return it == families_.end() ? std::vector<int>{} : it->second;
}

std::string MilpModel::column_name(int id)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "C%07d", id);
    return buf;
}

std::string MilpModel::row_name(int id)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "R%07d", id);
    return buf;
}

double MilpModel::evaluate_objective(const std::vector<double>& values) const
{
    double z = 0.0;
    for (const auto& t : objective_)
        z += t.coef * values.at(static_cast<std::size_t>(t.var));
    return z;
}

double MilpModel::row_activity(int row, const std::vector<double>& values) const
{
    double a = 0.0;
    for (const auto& t : rows_.at(static_cast<std::size_t>(row)).terms)
        a += t.coef * values.at(static_cast<std::size_t>(t.var));
    return a;
}

} // namespace ecm
