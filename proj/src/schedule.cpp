#include "ecm/schedule.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace ecm {

namespace {

constexpr std::array<int, 7> kMarketSizes{24, 24, 20, 17, 13, 9, 4};
constexpr std::array<int, 7> kMarketStages{3, 4, 7, 11, 16, 21, 28};

} // namespace

int standard_market_size(int id)
{
    if (id < 1 || id > 7)
        throw std::out_of_range("intraday market id must be in 1..7");
    return kMarketSizes[id - 1];
}

StageSchedule StageSchedule::standard()
{
    StageSchedule s;
    s.hours = 24;
    for (int i = 0; i < 7; ++i) {
        IntradayMarket m;
        m.id = i + 1;
        m.stage = kMarketStages[i];
        for (int h = 24 - kMarketSizes[i]; h < 24; ++h)
            m.periods.push_back(h);
        s.markets.push_back(std::move(m));
    }
    // Renewable stages fill every stage from 5 to 33 not taken by a market.
    int stage = 5;
    for (int h = 0; h < 24; ++h) {
        while (std::find(kMarketStages.begin(), kMarketStages.end(), stage) != kMarketStages.end())
            ++stage;
        s.renewable_stage.push_back(stage++);
    }
    return s;
}

StageSchedule StageSchedule::truncated(int hours)
{
    if (hours < 1 || hours > 24)
        throw std::out_of_range("horizon must be between 1 and 24 hours");
    StageSchedule full = standard();
    StageSchedule s;
    s.hours = hours;
    s.renewable_stage.assign(full.renewable_stage.begin(), full.renewable_stage.begin() + hours);
    for (auto& m : full.markets) {
        IntradayMarket kept{m.id, m.stage, {}};
        for (int h : m.periods)
            if (h < hours)
                kept.periods.push_back(h);
        if (!kept.periods.empty())
            s.markets.push_back(std::move(kept));
    }
    return s;
}

std::vector<int> StageSchedule::markets_at_hour(int hour) const
{
    std::vector<int> out;
    for (int m = 0; m < static_cast<int>(markets.size()); ++m)
        if (period_offset(m, hour) >= 0)
            out.push_back(m);
    return out;
}

int StageSchedule::period_offset(int m, int hour) const
{
    const auto& p = markets.at(m).periods;
    auto it = std::find(p.begin(), p.end(), hour);
    return it == p.end() ? -1 : static_cast<int>(it - p.begin());
}

int StageSchedule::market_at_stage(int stage) const
{
    for (int m = 0; m < static_cast<int>(markets.size()); ++m)
        if (markets[m].stage == stage)
            return m;
    return -1;
}

int StageSchedule::hour_at_stage(int stage) const
{
    auto it = std::find(renewable_stage.begin(), renewable_stage.end(), stage);
    return it == renewable_stage.end() ? -1 : static_cast<int>(it - renewable_stage.begin());
}

std::vector<std::string> StageSchedule::check() const
{
    std::vector<std::string> problems;
    if (hours < 1)
        problems.push_back("horizon has no hours");
    if (da_stage != 1 || rm_stage != 2)
        problems.push_back("day-ahead and reserve markets must reveal at stages 1 and 2");
    if (static_cast<int>(renewable_stage.size()) != hours)
        problems.push_back("renewable stage list does not cover every hour");
    for (std::size_t h = 1; h < renewable_stage.size(); ++h)
        if (renewable_stage[h] <= renewable_stage[h - 1])
            problems.push_back("renewable stages are not strictly increasing");
    for (std::size_t m = 0; m < markets.size(); ++m) {
        const auto& mk = markets[m];
        if (m > 0 && mk.stage <= markets[m - 1].stage)
            problems.push_back("intraday market stages are not strictly increasing");
        if (mk.periods.empty())
            problems.push_back("intraday market " + std::to_string(mk.id) + " has no periods");
        for (std::size_t k = 1; k < mk.periods.size(); ++k)
            if (mk.periods[k] != mk.periods[k - 1] + 1)
                problems.push_back("intraday market " + std::to_string(mk.id) + " periods are not contiguous");
        if (!mk.periods.empty() && (mk.periods.front() < 0 || mk.periods.back() >= hours))
            problems.push_back("intraday market " + std::to_string(mk.id) + " periods exceed the horizon");
        if (std::find(renewable_stage.begin(), renewable_stage.end(), mk.stage) != renewable_stage.end())
            problems.push_back("intraday market " + std::to_string(mk.id) + " shares a stage with a renewable observation");
        if (mk.stage <= rm_stage)
            problems.push_back("intraday market " + std::to_string(mk.id) + " is revealed before the reserve market");
    }
    if (!renewable_stage.empty() && renewable_stage.front() <= rm_stage)
        problems.push_back("renewable observations start before the reserve market");
    return problems;
}

} // namespace ecm
