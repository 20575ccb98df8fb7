#pragma once

#include <string>
#include <vector>

namespace ecm {

/// Flexible demand of the community: central estimate with hourly bounds,
/// interval targets and the cost of deviating from the central profile.
struct DemandProfile {
    struct Interval {
        int first = 0;          // 0-based hour, inclusive
        int last = 0;           // 0-based hour, inclusive
        double fraction = 0.0;  // share of central demand to be met inside
    };

    std::vector<double> central;   // MWh
    std::vector<double> min;       // MWh, inflexible part
    std::vector<double> max;       // MWh
    std::vector<Interval> intervals;
    double flex_cost = 0.0;        // EUR/MWh

    int hours() const { return static_cast<int>(central.size()); }

    /// Copy restricted to the first `hours` hours; intervals are clipped.
    DemandProfile truncated(int hours) const;

    std::vector<std::string> check() const;
};

/// Assets and market parameters of the energy community.
///
/// Hourly vectors left empty are filled by `resolved()`:
///  - imbalance caps: `ib_cap_fraction` of total renewable capacity,
///  - flexible-demand reserve caps: demand headroom divided by the reserve
///    duration, limited to `fd_reserve_limit`.
struct EcConfig {
    double pv_capacity = 30.0;      // MW
    double wind_capacity = 30.0;    // MW
    double bess_energy = 10.0;      // MWh
    double bess_power = 3.0;        // MW
    double bess_efficiency = 0.9;
    double soc_min = 0.1;
    double soc_max = 0.9;
    double soc_init = 0.5;
    double soc_final = 0.5;
    double min_da_bid = 0.1;        // MWh
    double im_ratio = 0.5;
    double reserve_duration = 0.25; // h
    double fd_reserve_limit = 1e9;  // MW
    double ib_cap_fraction = 0.1;

    std::vector<double> fd_reserve_up;    // MW per hour
    std::vector<double> fd_reserve_down;  // MW per hour
    std::vector<double> ib_pos_cap;       // MWh per hour
    std::vector<double> ib_neg_cap;       // MWh per hour

    /// Copy with every hourly vector sized to the demand horizon.
    EcConfig resolved(const DemandProfile& demand) const;

    /// Copy with explicit hourly vectors cut to the first `hours` hours.
    EcConfig truncated(int hours) const;

    std::vector<std::string> check() const;
};

} // namespace ecm
