#pragma once

#include <string>
#include <vector>

namespace ecm {

/// One auction intraday market and the hours it trades.
struct IntradayMarket {
    int id = 0;                 // 1..7
    int stage = 0;              // stage at which its price is revealed
    std::vector<int> periods;   // 0-based hours, ascending and contiguous
};

/// Stage layout of the decision process.
///
/// Hours are 0-based in the API (hour 0 is the first delivery hour); files
/// and reports use 1-based hours. Stage 0 is the root, stage 1 reveals the
/// day-ahead prices, stage 2 the reserve prices, and every later stage
/// either an intraday market price vector or the renewable output and
/// imbalance prices of a single hour.
struct StageSchedule {
    int hours = 24;
    int da_stage = 1;
    int rm_stage = 2;
    std::vector<IntradayMarket> markets;
    std::vector<int> renewable_stage;   // per hour

    /// The 34-stage layout (root + 33) for a 24-hour day with seven
    /// intraday auctions of sizes 24, 24, 20, 17, 13, 9, 4.
    static StageSchedule standard();

    /// The standard layout restricted to its first `hours` hours. Stage
    /// numbers are kept; markets without periods inside the horizon are
    /// dropped.
    static StageSchedule truncated(int hours);

    int last_stage() const { return renewable_stage.empty() ? rm_stage : renewable_stage.back(); }
    int total_stages() const { return last_stage() + 1; }

    /// Indices (into `markets`) of the markets trading `hour`.
    std::vector<int> markets_at_hour(int hour) const;

    /// Position of `hour` inside market `m`'s period list, or -1.
    int period_offset(int m, int hour) const;

    /// Market index whose price is revealed at `stage`, or -1.
    int market_at_stage(int stage) const;

    /// Hour whose renewable output is revealed at `stage`, or -1.
    int hour_at_stage(int stage) const;

    /// Lists every structural problem; empty when the layout is usable.
    std::vector<std::string> check() const;
};

/// Number of periods of intraday market `id` (1..7) in the standard layout.
int standard_market_size(int id);

} // namespace ecm
