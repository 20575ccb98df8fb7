#include "ecm/solver.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace ecm {

namespace {

constexpr const char* kMaxMarker = "* ecm: objective negated, original sense MAXIMIZE";

// Most precise rendering that fits a fixed-format numeric field.
std::string fit12(double v)
{
    if (v == 0.0)
        return "0";
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec == std::errc{} && res.ptr - buf <= 12)
        return {buf, res.ptr};
    for (int p = 12; p >= 1; --p) {
        const int n = std::snprintf(buf, sizeof buf, "%.*g", p, v);
        if (n <= 12)
            return {buf, static_cast<std::size_t>(n)};
    }
    throw std::invalid_argument("number cannot be written in MPS: " + std::to_string(v));
}

std::string pad(const std::string& s, std::size_t width)
{
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

// Field layout: columns 2-3, 5-12, 15-22, 25-36.
std::string entry(const std::string& code, const std::string& a, const std::string& b, const std::string& num)
{
    std::string line = " " + pad(code, 2) + " " + pad(a, 8) + "  " + pad(b, 8);
    if (!num.empty())
        line += "  " + num;
    while (!line.empty() && line.back() == ' ')
        line.pop_back();
    return line;
}

char sense_code(RowSense s)
{
    switch (s) {
    case RowSense::LessEqual: return 'L';
    case RowSense::GreaterEqual: return 'G';
    case RowSense::Equal: return 'E';
    }
    return 'E';
}

} // namespace

void write_mps(const MilpModel& model, std::ostream& out, const std::string& name)
{
    const double sign = model.maximize() ? -1.0 : 1.0;
    const int n = static_cast<int>(model.variable_count());

    // Column-major coefficients, duplicates within a row summed.
    std::vector<std::vector<std::pair<int, double>>> cols(static_cast<std::size_t>(n));
    std::vector<double> obj(static_cast<std::size_t>(n), 0.0);
    for (const auto& t : model.objective())
        obj[t.var] += sign * t.coef;
    const auto& rows = model.rows();
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (const auto& t : rows[r].terms) {
            auto& c = cols[t.var];
            if (!c.empty() && c.back().first == static_cast<int>(r))
                c.back().second += t.coef;
            else
                c.push_back({static_cast<int>(r), t.coef});
        }

    out << "NAME          " << name << "\n";
    if (model.maximize())
        out << kMaxMarker << "\n";
    out << "ROWS\n N  OBJ\n";
    for (std::size_t r = 0; r < rows.size(); ++r)
        out << ' ' << sense_code(rows[r].sense) << "  " << MilpModel::row_name(static_cast<int>(r)) << "\n";

    out << "COLUMNS\n";
    for (int j = 0; j < n; ++j) {
        const std::string cname = MilpModel::column_name(j);
        bool written = false;
        if (obj[j] != 0.0) {
            out << entry("", cname, "OBJ", fit12(obj[j])) << "\n";
            written = true;
        }
        for (const auto& [r, a] : cols[j])
            if (a != 0.0) {
                out << entry("", cname, MilpModel::row_name(r), fit12(a)) << "\n";
                written = true;
            }
        // Keep columns that appear nowhere so the column set stays complete.
        if (!written)
            out << entry("", cname, "OBJ", "0") << "\n";
    }

    out << "RHS\n";
    for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r].rhs != 0.0)
            out << entry("", "RHS", MilpModel::row_name(static_cast<int>(r)), fit12(rows[r].rhs)) << "\n";

    out << "BOUNDS\n";
    for (int j = 0; j < n; ++j) {
        const auto& v = model.variable(j);
        const std::string cname = MilpModel::column_name(j);
        if (v.kind == VarKind::Binary) {
            if (v.lower == 0.0 && v.upper == 1.0)
                out << entry("BV", "BND", cname, "1") << "\n";
            else {
                // Binary with tightened bounds (e.g. fixed by branching).
                out << entry("BV", "BND", cname, "1") << "\n";
                out << entry("LO", "BND", cname, fit12(v.lower)) << "\n";
                out << entry("UP", "BND", cname, fit12(v.upper)) << "\n";
            }
            continue;
        }
        const bool lo_inf = std::isinf(v.lower), up_inf = std::isinf(v.upper);
        if (!lo_inf && !up_inf && v.lower == v.upper)
            out << entry("FX", "BND", cname, fit12(v.lower)) << "\n";
        else if (lo_inf && up_inf)
            out << entry("FR", "BND", cname, "") << "\n";
        else {
            if (lo_inf)
                out << entry("MI", "BND", cname, "") << "\n";
            else if (v.lower != 0.0)
                out << entry("LO", "BND", cname, fit12(v.lower)) << "\n";
            if (!up_inf)
                out << entry("UP", "BND", cname, fit12(v.upper)) << "\n";
        }
    }
    out << "ENDATA\n";
}

void write_mps(const MilpModel& model, const std::filesystem::path& path, const std::string& name)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    write_mps(model, out, name);
    if (!out.flush())
        throw std::runtime_error("write failed: " + path.string());
}

MilpModel read_mps(std::istream& in)
{
    enum class Section { None, Rows, Columns, Rhs, Bounds, Done } section = Section::None;
    bool negated = false;
    std::string obj_name;
    std::vector<std::string> row_names;
    std::vector<RowSense> senses;
    std::unordered_map<std::string, int> row_index;
    std::vector<std::vector<Term>> row_terms;
    std::vector<double> rhs;

    std::vector<std::string> col_names;
    std::unordered_map<std::string, int> col_index;
    std::vector<Variable> vars;
    std::vector<bool> lower_set;
    std::vector<Term> objective;
    bool integer_block = false;

    auto number = [](const std::string& s, int line) {
        double v = 0.0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw std::runtime_error("MPS line " + std::to_string(line) + ": bad number '" + s + "'");
        return v;
    };
    auto column = [&](const std::string& name) -> int {
        auto it = col_index.find(name);
        if (it != col_index.end())
            return it->second;
        const int id = static_cast<int>(col_names.size());
        col_index.emplace(name, id);
        col_names.push_back(name);
        vars.push_back({0.0, integer_block ? 1.0 : kInf, integer_block ? VarKind::Binary : VarKind::Continuous});
        lower_set.push_back(false);
        return id;
    };
    auto add_coef = [&](int col, const std::string& row, double v, int line) {
        if (row == obj_name) {
            objective.push_back({col, v});
            return;
        }
        auto it = row_index.find(row);
        if (it == row_index.end())
            throw std::runtime_error("MPS line " + std::to_string(line) + ": unknown row " + row);
        row_terms[it->second].push_back({col, v});
    };

    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r')
            raw.pop_back();
        if (raw.rfind(kMaxMarker, 0) == 0) {
            negated = true;
            continue;
        }
        if (raw.empty() || raw[0] == '*')
            continue;
        std::istringstream ss(raw);
        std::vector<std::string> tok;
        for (std::string t; ss >> t;)
            tok.push_back(t);
        if (tok.empty())
            continue;
        if (raw[0] != ' ' && raw[0] != '\t') {
            const std::string& head = tok[0];
            if (head == "NAME")
                continue;
            if (head == "ROWS")
                section = Section::Rows;
            else if (head == "COLUMNS")
                section = Section::Columns;
            else if (head == "RHS")
                section = Section::Rhs;
            else if (head == "BOUNDS")
                section = Section::Bounds;
            else if (head == "ENDATA")
                section = Section::Done;
            else
                throw std::runtime_error("MPS line " + std::to_string(line) + ": unsupported section " + head);
            continue;
        }
        const auto need = [&](std::size_t k) {
            if (tok.size() < k)
                throw std::runtime_error("MPS line " + std::to_string(line) + ": too few fields");
        };
        switch (section) {
        case Section::Rows: {
            need(2);
            const char c = tok[0][0];
            if (c == 'N') {
                if (obj_name.empty())
                    obj_name = tok[1];
                break;
            }
            RowSense s = c == 'L' ? RowSense::LessEqual : c == 'G' ? RowSense::GreaterEqual : RowSense::Equal;
            if (c != 'L' && c != 'G' && c != 'E')
                throw std::runtime_error("MPS line " + std::to_string(line) + ": bad row type");
            row_index.emplace(tok[1], static_cast<int>(row_names.size()));
            row_names.push_back(tok[1]);
            senses.push_back(s);
            row_terms.emplace_back();
            rhs.push_back(0.0);
            break;
        }
        case Section::Columns: {
            if (tok.size() >= 3 && tok[1] == "'MARKER'") {
                integer_block = tok[2] == "'INTORG'";
                break;
            }
            need(3);
            const int col = column(tok[0]);
            add_coef(col, tok[1], number(tok[2], line), line);
            if (tok.size() >= 5)
                add_coef(col, tok[3], number(tok[4], line), line);
            break;
        }
        case Section::Rhs: {
            need(3);
            for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
                if (tok[k] == obj_name)
                    continue;
                auto it = row_index.find(tok[k]);
                if (it == row_index.end())
                    throw std::runtime_error("MPS line " + std::to_string(line) + ": unknown row " + tok[k]);
                rhs[it->second] = number(tok[k + 1], line);
            }
            break;
        }
        case Section::Bounds: {
            need(3);
            const std::string& type = tok[0];
            auto it = col_index.find(tok[2]);
            if (it == col_index.end())
                throw std::runtime_error("MPS line " + std::to_string(line) + ": unknown column " + tok[2]);
            auto& v = vars[it->second];
            const bool has_value = tok.size() >= 4;
            const double val = has_value ? number(tok[3], line) : 0.0;
            if (type == "UP") {
                v.upper = val;
                if (val < 0.0 && !lower_set[it->second] && v.lower == 0.0)
                    v.lower = -kInf;
            } else if (type == "LO") {
                v.lower = val;
                lower_set[it->second] = true;
            } else if (type == "FX") {
                v.lower = v.upper = val;
            } else if (type == "FR") {
                v.lower = -kInf;
                v.upper = kInf;
            } else if (type == "MI") {
                v.lower = -kInf;
            } else if (type == "PL") {
                v.upper = kInf;
            } else if (type == "BV") {
                v.kind = VarKind::Binary;
                v.lower = 0.0;
                v.upper = 1.0;
            } else if (type == "UI" || type == "LI") {
                (type == "UI" ? v.upper : v.lower) = val;
                v.kind = VarKind::Binary;
            } else {
                throw std::runtime_error("MPS line " + std::to_string(line) + ": unsupported bound " + type);
            }
            break;
        }
        default:
            throw std::runtime_error("MPS line " + std::to_string(line) + ": data outside a section");
        }
    }
    if (section != Section::Done)
        throw std::runtime_error("MPS file has no ENDATA");

    MilpModel model;
    for (std::size_t j = 0; j < vars.size(); ++j) {
        auto v = vars[j];
        if (v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0))
            throw std::runtime_error("general integer column " + col_names[j] + " is not supported");
        model.add_variable({col_names[j]}, v.lower, v.upper, v.kind);
    }
    for (std::size_t r = 0; r < row_names.size(); ++r)
        model.add_row("mps", row_terms[r], senses[r], rhs[r]);
    if (negated)
        for (auto& t : objective)
            t.coef = -t.coef;
    model.set_objective(std::move(objective), negated);
    return model;
}

MilpModel read_mps(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return read_mps(in);
}

void write_lp(const MilpModel& model, std::ostream& out)
{
    auto expr = [&](const std::vector<Term>& terms) {
        std::string s;
        for (const auto& t : terms) {
            char buf[48];
            std::snprintf(buf, sizeof buf, " %c %.17g ", t.coef < 0 ? '-' : '+', std::fabs(t.coef));
            s += buf + MilpModel::column_name(t.var);
        }
        return s.empty() ? std::string(" 0 ") + MilpModel::column_name(0) : s;
    };
    out << (model.maximize() ? "Maximize\n" : "Minimize\n") << " obj:" << expr(model.objective()) << "\n";
    out << "Subject To\n";
    const auto& rows = model.rows();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const char* op = rows[r].sense == RowSense::LessEqual ? "<=" : rows[r].sense == RowSense::Equal ? "=" : ">=";
        char buf[48];
        std::snprintf(buf, sizeof buf, " %s %.17g", op, rows[r].rhs);
        out << " " << MilpModel::row_name(static_cast<int>(r)) << ":" << expr(rows[r].terms) << buf << "\n";
    }
    out << "Bounds\n";
    std::vector<int> binaries;
    for (std::size_t j = 0; j < model.variable_count(); ++j) {
        const auto& v = model.variable(static_cast<int>(j));
        const std::string c = MilpModel::column_name(static_cast<int>(j));
        if (v.kind == VarKind::Binary) {
            binaries.push_back(static_cast<int>(j));
            continue;
        }
        if (std::isinf(v.lower) && std::isinf(v.upper))
            out << " " << c << " free\n";
        else if (v.lower != 0.0 || !std::isinf(v.upper)) {
            char lo[32], up[32];
            std::snprintf(lo, sizeof lo, "%.17g", v.lower);
            std::snprintf(up, sizeof up, "%.17g", v.upper);
            out << " " << (std::isinf(v.lower) ? "-inf" : lo) << " <= " << c << " <= " << (std::isinf(v.upper) ? "+inf" : up)
                << "\n";
        }
    }
    if (!binaries.empty()) {
        out << "Binaries\n";
        for (int j : binaries)
            out << " " << MilpModel::column_name(j) << "\n";
    }
    out << "End\n";
}

} // namespace ecm
