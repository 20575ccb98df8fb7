#pragma once

#include "ecm/ec_config.hpp"
#include "ecm/scenario_tree.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ecm {

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD; throws std::invalid_argument otherwise.
Date parse_date(const std::string& text);
std::string format_date(const Date& d);
bool is_weekend(const Date& d);
Date next_day(const Date& d);

/// One complete historical day of every series. Intraday vectors follow the
/// standard layout: `im[i]` holds the prices of market i+1 for its periods.
struct HistoricalDay {
    Date date;
    std::vector<double> da, rm, ib_pos, ib_neg;
    std::vector<std::vector<double>> im;
    std::vector<double> wind_cf, pv_cf;
};

struct HistoricalWindow {
    std::vector<HistoricalDay> days;   // ascending dates, all complete

    bool empty() const { return days.empty(); }
    Date first() const { return days.front().date; }
    Date last() const { return days.back().date; }

    /// Days strictly before `date`.
    HistoricalWindow before(const Date& date) const;
};

struct HistoryLoad {
    HistoricalWindow window;
    std::vector<std::string> warnings;   // one per dropped day
};

/// Reads the price CSV (`date,hour,da,rm,im1..im7,ib_pos,ib_neg`) and the
/// renewable CSV (`date,hour,wind_cf,pv_cf`) and aligns them on the dates
/// complete in both. Missing IM7 cells for hours 21-24 are taken from IM2.
/// Throws std::runtime_error naming file and line on malformed rows, and
/// when no date is complete in both files.
HistoryLoad load_history(const std::filesystem::path& price_file, const std::filesystem::path& renewable_file);

/// Reads the demand CSV (`hour,central,min,max`).
DemandProfile load_demand(const std::filesystem::path& demand_file);

/// Equiprobable scenarios, i.e. a fan before reduction.
struct ScenarioFan {
    StageSchedule schedule;
    std::vector<ScenarioData> scenarios;
    std::vector<double> probabilities;
    std::vector<Date> source_days;   // historical day behind each scenario

    int size() const { return static_cast<int>(scenarios.size()); }
    ScenarioTree to_tree() const;
};

/// Day-block bootstrap: each scenario copies every series of one historical
/// day drawn uniformly (with replacement) from the days sharing the target
/// day's weekday/weekend class. Capacity factors are scaled to energies with
/// the configured capacities. Deterministic in (window, target, n, seed).
ScenarioFan sample_fan(const HistoricalWindow& window, const EcConfig& config, const Date& target, int n,
                       std::uint64_t seed, const StageSchedule& schedule = StageSchedule::standard());

/// Builds scenario data for `schedule` from one historical day.
ScenarioData scenario_from_day(const HistoricalDay& day, const EcConfig& config, const StageSchedule& schedule);

} // namespace ecm
