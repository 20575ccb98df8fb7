#include "ecm/history.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ecm {

namespace {

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    for (auto& c : out) {
        while (!c.empty() && (c.back() == '\r' || c.back() == ' '))
            c.pop_back();
        while (!c.empty() && c.front() == ' ')
            c.erase(c.begin());
    }
    return out;
}

std::optional<double> parse_cell(const std::string& cell)
{
    if (cell.empty())
        return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw std::invalid_argument("not a number: '" + cell + "'");
    return v;
}

int parse_int(const std::string& cell)
{
    int v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw std::invalid_argument("not an integer: '" + cell + "'");
    return v;
}

/// Reads a CSV with the exact header given, calling `row` for every data
/// line. Errors are rethrown with file and line.
template <typename RowFn>
void read_csv(const std::filesystem::path& path, const std::vector<std::string>& header, RowFn row)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || split_csv(line) != header) {
        std::string expected;
        for (const auto& h : header)
            expected += (expected.empty() ? "" : ",") + h;
        throw std::runtime_error(path.string() + ":1: expected header '" + expected + "'");
    }
    for (int lineno = 2; std::getline(in, line); ++lineno) {
        if (line.empty() || line == "\r")
            continue;
        auto cells = split_csv(line);
        try {
            if (cells.size() != header.size())
                throw std::invalid_argument("expected " + std::to_string(header.size()) + " fields, got " +
                                            std::to_string(cells.size()));
            row(cells);
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

using DayKey = int;   // days since epoch

DayKey key_of(const Date& d) { return std::chrono::sys_days(d).time_since_epoch().count(); }

struct PriceHour {
    std::optional<double> da, rm, ib_pos, ib_neg;
    std::array<std::optional<double>, 7> im;
};

struct PriceDay {
    std::map<int, PriceHour> hours;
};

struct RenewableDay {
    std::map<int, std::pair<double, double>> hours;
};

} // namespace

Date parse_date(const std::string& text)
{
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw std::invalid_argument("date must be YYYY-MM-DD: '" + text + "'");
    const int y = parse_int(text.substr(0, 4));
    const int m = parse_int(text.substr(5, 2));
    const int d = parse_int(text.substr(8, 2));
    Date date{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(m)),
              std::chrono::day(static_cast<unsigned>(d))};
    if (!date.ok())
        throw std::invalid_argument("invalid calendar date: '" + text + "'");
    return date;
}

std::string format_date(const Date& d)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

bool is_weekend(const Date& d)
{
    const std::chrono::weekday wd{std::chrono::sys_days(d)};
    return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

Date next_day(const Date& d)
{
    return Date{std::chrono::sys_days(d) + std::chrono::days(1)};
}

HistoricalWindow HistoricalWindow::before(const Date& date) const
{
    HistoricalWindow w;
    for (const auto& d : days)
        if (std::chrono::sys_days(d.date) < std::chrono::sys_days(date))
            w.days.push_back(d);
    return w;
}

HistoryLoad load_history(const std::filesystem::path& price_file, const std::filesystem::path& renewable_file)
{
    std::map<DayKey, std::pair<Date, PriceDay>> prices;
    read_csv(price_file,
             {"date", "hour", "da", "rm", "im1", "im2", "im3", "im4", "im5", "im6", "im7", "ib_pos", "ib_neg"},
             [&](const std::vector<std::string>& c) {
                 const Date date = parse_date(c[0]);
                 const int hour = parse_int(c[1]);
                 if (hour < 1 || hour > 24)
                     throw std::invalid_argument("hour must be in 1..24");
                 PriceHour ph;
                 ph.da = parse_cell(c[2]);
                 ph.rm = parse_cell(c[3]);
                 for (int i = 0; i < 7; ++i)
                     ph.im[i] = parse_cell(c[4 + i]);
                 ph.ib_pos = parse_cell(c[11]);
                 ph.ib_neg = parse_cell(c[12]);
                 auto& day = prices[key_of(date)];
                 day.first = date;
                 if (!day.second.hours.emplace(hour, ph).second)
                     throw std::invalid_argument("duplicate row for " + c[0] + " hour " + c[1]);
             });

    std::map<DayKey, std::pair<Date, RenewableDay>> renewables;
    read_csv(renewable_file, {"date", "hour", "wind_cf", "pv_cf"}, [&](const std::vector<std::string>& c) {
        const Date date = parse_date(c[0]);
        const int hour = parse_int(c[1]);
        if (hour < 1 || hour > 24)
            throw std::invalid_argument("hour must be in 1..24");
        const auto wind = parse_cell(c[2]);
        const auto pv = parse_cell(c[3]);
        if (!wind || !pv)
            return;   // incomplete hour; the day is dropped below
        if (*wind < 0.0 || *wind > 1.0 || *pv < 0.0 || *pv > 1.0)
            throw std::invalid_argument("capacity factor outside [0, 1]");
        auto& day = renewables[key_of(date)];
        day.first = date;
        if (!day.second.hours.emplace(hour, std::make_pair(*wind, *pv)).second)
            throw std::invalid_argument("duplicate row for " + c[0] + " hour " + c[1]);
    });

    HistoryLoad result;
    if (prices.empty() || renewables.empty())
        throw std::runtime_error("history files contain no data rows");
    const DayKey lo = std::max(prices.begin()->first, renewables.begin()->first);
    const DayKey hi = std::min(prices.rbegin()->first, renewables.rbegin()->first);
    if (lo > hi)
        throw std::runtime_error("price and renewable files have no dates in common");

    for (auto it = prices.lower_bound(lo); it != prices.end() && it->first <= hi; ++it) {
        const Date date = it->second.first;
        const auto& ph = it->second.second.hours;
        auto rit = renewables.find(it->first);
        auto drop = [&](const std::string& why) {
            result.warnings.push_back("dropped " + format_date(date) + ": " + why);
        };
        if (rit == renewables.end() || rit->second.second.hours.size() != 24) {
            drop("renewable data incomplete");
            continue;
        }
        if (ph.size() != 24) {
            drop("price data has " + std::to_string(ph.size()) + " hours");
            continue;
        }
        HistoricalDay day;
        day.date = date;
        day.im.resize(7);
        bool complete = true;
        for (int h = 1; h <= 24 && complete; ++h) {
            const auto& p = ph.at(h);
            complete = p.da && p.rm && p.ib_pos && p.ib_neg;
            if (!complete)
                break;
            day.da.push_back(*p.da);
            day.rm.push_back(*p.rm);
            day.ib_pos.push_back(*p.ib_pos);
            day.ib_neg.push_back(*p.ib_neg);
            for (int i = 0; i < 7; ++i) {
                if (h < 25 - standard_market_size(i + 1))
                    continue;
                auto v = p.im[i];
                if (!v && i == 6)
                    v = p.im[1];
                if (!v) {
                    complete = false;
                    break;
                }
                day.im[i].push_back(*v);
            }
            const auto& r = rit->second.second.hours.at(h);
            day.wind_cf.push_back(r.first);
            day.pv_cf.push_back(r.second);
        }
        if (!complete) {
            drop("missing price values");
            continue;
        }
        result.window.days.push_back(std::move(day));
    }
    // Dates present only in the renewable file inside the common range.
    for (auto it = renewables.lower_bound(lo); it != renewables.end() && it->first <= hi; ++it)
        if (!prices.count(it->first))
            result.warnings.push_back("dropped " + format_date(it->second.first) + ": price data missing");

    if (result.window.empty())
        throw std::runtime_error("no complete day is shared by the price and renewable files");
    return result;
}

DemandProfile load_demand(const std::filesystem::path& demand_file)
{
    std::map<int, std::array<double, 3>> rows;
    read_csv(demand_file, {"hour", "central", "min", "max"}, [&](const std::vector<std::string>& c) {
        const int hour = parse_int(c[0]);
        if (hour < 1 || hour > 24)
            throw std::invalid_argument("hour must be in 1..24");
        auto central = parse_cell(c[1]), lo = parse_cell(c[2]), hi = parse_cell(c[3]);
        if (!central || !lo || !hi)
            throw std::invalid_argument("empty demand value");
        if (!rows.emplace(hour, std::array<double, 3>{*central, *lo, *hi}).second)
            throw std::invalid_argument("duplicate hour");
    });
    DemandProfile d;
    int expected = 1;
    for (const auto& [hour, v] : rows) {
        if (hour != expected++)
            throw std::runtime_error(demand_file.string() + ": hours must be consecutive from 1");
        d.central.push_back(v[0]);
        d.min.push_back(v[1]);
        d.max.push_back(v[2]);
    }
    return d;
}

ScenarioData scenario_from_day(const HistoricalDay& day, const EcConfig& config, const StageSchedule& schedule)
{
    ScenarioData s = make_scenario_data(schedule);
    for (int t = 0; t < schedule.hours; ++t) {
        s.da_price[t] = day.da.at(t);
        s.rm_price[t] = day.rm.at(t);
        s.ib_pos_price[t] = day.ib_pos.at(t);
        s.ib_neg_price[t] = day.ib_neg.at(t);
        s.wind[t] = day.wind_cf.at(t) * config.wind_capacity;
        s.pv[t] = day.pv_cf.at(t) * config.pv_capacity;
    }
    for (std::size_t m = 0; m < schedule.markets.size(); ++m) {
        const auto& mk = schedule.markets[m];
        const int first_hour = 24 - standard_market_size(mk.id);
        for (std::size_t k = 0; k < mk.periods.size(); ++k)
            s.im_price[m][k] = day.im.at(mk.id - 1).at(mk.periods[k] - first_hour);
    }
    return s;
}

ScenarioTree ScenarioFan::to_tree() const
{
    return ScenarioTree::fan(schedule, probabilities, scenarios);
}

ScenarioFan sample_fan(const HistoricalWindow& window, const EcConfig& config, const Date& target, int n,
                       std::uint64_t seed, const StageSchedule& schedule)
{
    if (n < 1)
        throw std::invalid_argument("fan size must be at least 1");
    if (window.empty())
        throw std::invalid_argument("historical window is empty");
    const bool weekend = is_weekend(target);
    std::vector<const HistoricalDay*> pool;
    for (const auto& d : window.days)
        if (is_weekend(d.date) == weekend)
            pool.push_back(&d);
    if (pool.empty())
        throw std::invalid_argument(std::string("no historical ") + (weekend ? "weekend" : "weekday") +
                                    " days to sample from");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    ScenarioFan fan;
    fan.schedule = schedule;
    for (int k = 0; k < n; ++k) {
        const HistoricalDay& day = *pool[pick(rng)];
        fan.scenarios.push_back(scenario_from_day(day, config, schedule));
        fan.source_days.push_back(day.date);
    }
    fan.probabilities.assign(static_cast<std::size_t>(n), 1.0 / n);
    return fan;
}

} // namespace ecm
