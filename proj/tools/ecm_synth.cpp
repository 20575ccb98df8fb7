// Writes a synthetic market and renewable history for one year plus a
// community demand profile, in the CSV layouts read by `ecm ingest`.
//
// Prices follow a daily shape (morning and evening peaks, a solar dip at
// noon) on top of a seasonal level and a day-level AR(1) factor. Wind is a
// persistent AR(1) capacity factor; PV is a clear-sky bell scaled by a daily
// cloudiness draw. The spring clock-change day is written with 23 hours, as
// real exports have it, so the loader's incomplete-day handling is exercised.

#include "ecm/history.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

namespace {

constexpr double kPi = 3.14159265358979323846;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"synthetic history generator"};
    std::string out_dir = "data/synthetic";
    int year = 2023;
    std::uint64_t seed = 2023;
    app.add_option("--out-dir", out_dir, "output directory");
    app.add_option("--year", year, "calendar year");
    app.add_option("--seed", seed, "random seed");
    CLI11_PARSE(app, argc, argv);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::ofstream prices(fs::path(out_dir) / ("prices_" + std::to_string(year) + ".csv"));
    std::ofstream renew(fs::path(out_dir) / ("renewables_" + std::to_string(year) + ".csv"));
    prices << "date,hour,da,rm,im1,im2,im3,im4,im5,im6,im7,ib_pos,ib_neg\n";
    renew << "date,hour,wind_cf,pv_cf\n";

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    const ecm::Date first{std::chrono::year(year), std::chrono::January, std::chrono::day(1)};
    const ecm::Date last{std::chrono::year(year), std::chrono::December, std::chrono::day(31)};
    double level = 0.0, wind = 0.35;
    int spring_sundays = 0;
    for (ecm::Date d = first; std::chrono::sys_days(d) <= std::chrono::sys_days(last); d = ecm::next_day(d)) {
        const int doy = static_cast<int>((std::chrono::sys_days(d) - std::chrono::sys_days(first)).count());
        const double season = std::cos(2.0 * kPi * (doy - 15) / 365.0);   // +1 mid-January
        const bool weekend = ecm::is_weekend(d);
        level = 0.7 * level + 12.0 * z(rng);
        const double base = 95.0 + 20.0 * season + level - (weekend ? 12.0 : 0.0);
        const double cloud = clamp01(0.35 + 0.3 * z(rng) + 0.15 * season);
        const double daylight = 12.0 - 2.8 * season;   // hours
        const double wind_mean = 0.33 + 0.08 * season;

        // Last Sunday of March: the clock jumps and hour 3 does not exist.
        bool short_day = false;
        if (d.month() == std::chrono::March && std::chrono::weekday{std::chrono::sys_days(d)} == std::chrono::Sunday &&
            static_cast<unsigned>(d.day()) > 24 && spring_sundays++ == 0)
            short_day = true;

        const std::string date = ecm::format_date(d);
        for (int h = 1; h <= 24; ++h) {
            const double x = h - 0.5;
            const double shape = 18.0 * std::exp(-0.5 * std::pow((x - 8.5) / 1.8, 2)) +
                                 26.0 * std::exp(-0.5 * std::pow((x - 20.5) / 2.2, 2)) - 10.0 * (x < 6.0);
            const double sun = std::max(0.0, std::cos(kPi * (x - 13.0) / daylight));
            const double pv = clamp01((1.0 - 0.75 * cloud) * std::pow(sun, 1.3) * (0.85 + 0.1 * u(rng)));
            wind = clamp01(wind + 0.25 * (wind_mean - wind) + 0.07 * z(rng));
            const double da = std::max(0.0, base + shape - 30.0 * pv - 20.0 * (wind - wind_mean) + 6.0 * z(rng));
            const double rm = std::max(1.0, 12.0 + 0.08 * da + 4.0 * z(rng));
            double im[7];
            for (int i = 0; i < 7; ++i)
                im[i] = std::max(0.0, da + (3.0 + 1.5 * i) * z(rng));
            const double ib_pos = std::max(0.0, da * (0.85 + 0.1 * u(rng)) - 4.0 * u(rng));
            const double ib_neg = da * (1.05 + 0.15 * u(rng)) + 4.0 * u(rng);

            if (short_day && h == 3)
                continue;
            char line[256];
            std::snprintf(line, sizeof line, "%s,%d,%.2f,%.2f", date.c_str(), h, da, rm);
            prices << line;
            for (int i = 0; i < 7; ++i) {
                // Markets only quote the hours they trade.
                const int size = ecm::standard_market_size(i + 1);
                if (h >= 25 - size) {
                    std::snprintf(line, sizeof line, ",%.2f", im[i]);
                    prices << line;
                } else {
                    prices << ',';
                }
            }
            std::snprintf(line, sizeof line, ",%.2f,%.2f\n", ib_pos, ib_neg);
            prices << line;
            std::snprintf(line, sizeof line, "%s,%d,%.4f,%.4f\n", date.c_str(), h, wind, pv);
            renew << line;
        }
    }

    // Community demand: evening-peaking residential mix with a daytime
    // commercial block; bounds at +-25 % of the central estimate.
    std::ofstream demand(fs::path(out_dir) / "demand.csv");
    demand << "hour,central,min,max\n";
    for (int h = 1; h <= 24; ++h) {
        const double x = h - 0.5;
        const double c = 6.0 + 2.5 * std::exp(-0.5 * std::pow((x - 20.0) / 2.5, 2)) +
                         1.8 * std::exp(-0.5 * std::pow((x - 12.0) / 3.0, 2)) - 1.2 * (x < 6.0);
        char line[96];
        std::snprintf(line, sizeof line, "%d,%.3f,%.3f,%.3f\n", h, c, 0.75 * c, 1.25 * c);
        demand << line;
    }
    std::printf("wrote %s\n", out_dir.c_str());
    return 0;
}
