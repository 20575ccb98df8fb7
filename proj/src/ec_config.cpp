#include "ecm/ec_config.hpp"

#include <algorithm>
#include <cmath>

namespace ecm {

DemandProfile DemandProfile::truncated(int hours) const
{
    DemandProfile d = *this;
    hours = std::min(hours, this->hours());
    d.central.resize(hours);
    d.min.resize(hours);
    d.max.resize(hours);
    d.intervals.clear();
    for (const auto& iv : intervals) {
        if (iv.first >= hours)
            continue;
        d.intervals.push_back({iv.first, std::min(iv.last, hours - 1), iv.fraction});
    }
    return d;
}

EcConfig EcConfig::truncated(int hours) const
{
    EcConfig c = *this;
    for (auto* v : {&c.fd_reserve_up, &c.fd_reserve_down, &c.ib_pos_cap, &c.ib_neg_cap})
        if (static_cast<int>(v->size()) > hours)
            v->resize(hours);
    return c;
}

std::vector<std::string> DemandProfile::check() const
{
    std::vector<std::string> problems;
    const auto n = central.size();
    if (n == 0)
        problems.push_back("demand profile is empty");
    if (min.size() != n || max.size() != n)
        problems.push_back("demand min/central/max lengths differ");
    for (std::size_t t = 0; t < std::min({n, min.size(), max.size()}); ++t) {
        if (!(0.0 <= min[t] && min[t] <= central[t] && central[t] <= max[t]))
            problems.push_back("demand bounds violated at hour " + std::to_string(t + 1));
    }
    for (const auto& iv : intervals) {
        if (iv.first < 0 || iv.first > iv.last || iv.last >= static_cast<int>(n))
            problems.push_back("demand interval outside the horizon");
        if (iv.fraction < 0.0 || iv.fraction > 1.0)
            problems.push_back("demand interval fraction outside [0, 1]");
    }
    if (flex_cost < 0.0)
        problems.push_back("flexible demand cost is negative");
    return problems;
}

EcConfig EcConfig::resolved(const DemandProfile& demand) const
{
    EcConfig c = *this;
    const int hours = demand.hours();
    const double ib_default = ib_cap_fraction * (pv_capacity + wind_capacity);
    auto fill = [hours](std::vector<double>& v, auto value_at) {
        if (v.empty())
            for (int t = 0; t < hours; ++t)
                v.push_back(value_at(t));
        v.resize(hours, v.empty() ? 0.0 : v.back());
    };
    fill(c.ib_pos_cap, [&](int) { return ib_default; });
    fill(c.ib_neg_cap, [&](int) { return ib_default; });
    // Upward reserve from demand means consuming less, so it is limited by
    // the distance to the minimum; downward by the distance to the maximum.
    fill(c.fd_reserve_up, [&](int t) {
        return std::min(fd_reserve_limit, (demand.central[t] - demand.min[t]) / reserve_duration);
    });
    fill(c.fd_reserve_down, [&](int t) {
        return std::min(fd_reserve_limit, (demand.max[t] - demand.central[t]) / reserve_duration);
    });
    return c;
}

std::vector<std::string> EcConfig::check() const
{
    std::vector<std::string> problems;
    auto nonneg = [&](double v, const char* name) {
        if (!(v >= 0.0))
            problems.push_back(std::string(name) + " must be nonnegative");
    };
    nonneg(pv_capacity, "pv_capacity");
    nonneg(wind_capacity, "wind_capacity");
    nonneg(bess_power, "bess_power");
    nonneg(min_da_bid, "min_da_bid");
    nonneg(im_ratio, "im_ratio");
    if (!(bess_energy > 0.0))
        problems.push_back("bess_energy must be positive");
    if (!(bess_efficiency > 0.0 && bess_efficiency <= 1.0))
        problems.push_back("bess_efficiency must be in (0, 1]");
    if (!(reserve_duration > 0.0))
        problems.push_back("reserve_duration must be positive");
    auto unit = [&](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0))
            problems.push_back(std::string(name) + " must be in [0, 1]");
    };
    unit(soc_min, "soc_min");
    unit(soc_max, "soc_max");
    unit(soc_init, "soc_init");
    unit(soc_final, "soc_final");
    if (!(soc_min <= soc_init && soc_init <= soc_max))
        problems.push_back("soc_init outside [soc_min, soc_max]");
    if (!(soc_min <= soc_final && soc_final <= soc_max))
        problems.push_back("soc_final outside [soc_min, soc_max]");
    for (const auto* v : {&fd_reserve_up, &fd_reserve_down, &ib_pos_cap, &ib_neg_cap})
        for (double x : *v)
            if (!(x >= 0.0)) {
                problems.push_back("hourly caps must be nonnegative");
                break;
            }
    return problems;
}

} // namespace ecm
