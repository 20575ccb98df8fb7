#include "ecm/history.hpp"
#include "ecm/renewables.hpp"

#include "support.hpp"

#include <doctest.h>

#include <fstream>
#include <set>

using namespace ecm;
using testing::TempDir;

namespace {

Date day(const char* s) { return parse_date(s); }

// Price rows for `days` consecutive days from `first`, hours 1..hours.
void write_prices(const std::filesystem::path& p, Date first, int days, int hours = 24, bool with_im7 = true)
{
    std::ofstream out(p);
    out << "date,hour,da,rm,im1,im2,im3,im4,im5,im6,im7,ib_pos,ib_neg\n";
    for (int k = 0; k < days; ++k, first = next_day(first))
        for (int h = 1; h <= hours; ++h) {
            out << format_date(first) << ',' << h << ',' << 50 + h << ',' << 10 << ',' << 60 + h << ',' << 70 + h;
            for (int i = 3; i <= 7; ++i) {
                out << ',';
                if (h >= 25 - standard_market_size(i) && (i != 7 || with_im7))
                    out << 80 + i;
            }
            out << ',' << 40 << ',' << 90 << '\n';
        }
}

void write_renewables(const std::filesystem::path& p, Date first, int days)
{
    std::ofstream out(p);
    out << "date,hour,wind_cf,pv_cf\n";
    for (int k = 0; k < days; ++k, first = next_day(first))
        for (int h = 1; h <= 24; ++h)
            out << format_date(first) << ',' << h << ',' << 0.5 << ',' << (h > 8 && h < 18 ? 0.4 : 0.0) << '\n';
}

HistoricalDay synthetic_day(Date d, double level)
{
    HistoricalDay h;
    h.date = d;
    for (int t = 0; t < 24; ++t) {
        h.da.push_back(level + t);
        h.rm.push_back(5);
        h.ib_pos.push_back(level - 5);
        h.ib_neg.push_back(level + 5);
        h.wind_cf.push_back(0.3);
        h.pv_cf.push_back(t > 7 && t < 17 ? 0.5 : 0.0);
    }
    for (int i = 1; i <= 7; ++i)
        h.im.push_back(std::vector<double>(standard_market_size(i), level + i));
    return h;
}

std::string ninja_body(int hours, double kw)
{
    nlohmann::json data = nlohmann::json::object();
    const long long start = 1672531200000LL;   // 2023-01-01T00:00Z in ms
    for (int k = 0; k < hours; ++k)
        data[std::to_string(start + 3600000LL * k)] = {{"electricity", kw * (k % 10) / 10.0}};
    return nlohmann::json{{"data", data}, {"metadata", nlohmann::json::object()}}.dump();
}

} // namespace

TEST_CASE("dates")
{
    CHECK(format_date(day("2023-12-31")) == "2023-12-31");
    CHECK(format_date(next_day(day("2023-12-31"))) == "2024-01-01");
    CHECK(is_weekend(day("2023-12-02")));
    CHECK_FALSE(is_weekend(day("2023-12-04")));
    CHECK_THROWS_AS(parse_date("2023-02-30"), std::invalid_argument);
    CHECK_THROWS_AS(parse_date("31/12/2023"), std::invalid_argument);
}

TEST_CASE("load_history")
{
    TempDir dir("history");
    SUBCASE("two complete days")
    {
        write_prices(dir / "p.csv", day("2023-01-01"), 2);
        write_renewables(dir / "r.csv", day("2023-01-01"), 2);
        const auto load = load_history(dir / "p.csv", dir / "r.csv");
        REQUIRE(load.window.days.size() == 2);
        CHECK(load.warnings.empty());
        const auto& d = load.window.days[0];
        CHECK(d.da[0] == 51);
        CHECK(d.im[0].size() == 24);
        CHECK(d.im[2].size() == 20);
        CHECK(d.im[2][0] == 83);   // IM3 starts at hour 5
        CHECK(d.im[6].size() == 4);
        CHECK(d.pv_cf[10] == doctest::Approx(0.4));
    }
    SUBCASE("a 23-hour day is dropped with a warning")
    {
        write_prices(dir / "p.csv", day("2023-03-26"), 1, 23);
        write_prices(dir / "q.csv", day("2023-03-27"), 1);
        // concatenate the complete day after the short one
        {
            std::ifstream in(dir / "q.csv");
            std::string line;
            std::getline(in, line);
            std::ofstream out(dir / "p.csv", std::ios::app);
            while (std::getline(in, line))
                out << line << '\n';
        }
        write_renewables(dir / "r.csv", day("2023-03-26"), 2);
        const auto load = load_history(dir / "p.csv", dir / "r.csv");
        REQUIRE(load.window.days.size() == 1);
        CHECK(format_date(load.window.days[0].date) == "2023-03-27");
        REQUIRE(load.warnings.size() == 1);
        CHECK(load.warnings[0].find("2023-03-26") != std::string::npos);
    }
    SUBCASE("overlapping ranges intersect")
    {
        write_prices(dir / "p.csv", day("2023-01-01"), 10);
        write_renewables(dir / "r.csv", day("2023-01-05"), 16);
        const auto load = load_history(dir / "p.csv", dir / "r.csv");
        REQUIRE(load.window.days.size() == 6);
        CHECK(format_date(load.window.first()) == "2023-01-05");
        CHECK(format_date(load.window.last()) == "2023-01-10");
    }
    SUBCASE("missing IM7 is taken from IM2")
    {
        write_prices(dir / "p.csv", day("2023-01-01"), 1, 24, false);
        write_renewables(dir / "r.csv", day("2023-01-01"), 1);
        const auto load = load_history(dir / "p.csv", dir / "r.csv");
        REQUIRE(load.window.days.size() == 1);
        const auto& d = load.window.days[0];
        CHECK(d.im[6] == std::vector<double>{70 + 21, 70 + 22, 70 + 23, 70 + 24});
    }
    SUBCASE("malformed files name file and line")
    {
        write_renewables(dir / "r.csv", day("2023-01-01"), 1);
        {
            std::ofstream out(dir / "p.csv");
            out << "date,hour,da\n";
        }
        CHECK_THROWS_WITH_AS(load_history(dir / "p.csv", dir / "r.csv"), doctest::Contains("p.csv:1"),
                             std::runtime_error);
        write_prices(dir / "p.csv", day("2023-01-01"), 1);
        {
            std::ofstream out(dir / "r.csv");
            out << "date,hour,wind_cf,pv_cf\n2023-01-01,1,1.5,0\n";
        }
        CHECK_THROWS_WITH_AS(load_history(dir / "p.csv", dir / "r.csv"), doctest::Contains("r.csv:2"),
                             std::runtime_error);
    }
}

TEST_CASE("load_demand")
{
    TempDir dir("demand");
    {
        std::ofstream out(dir / "d.csv");
        out << "hour,central,min,max\n";
        for (int h = 1; h <= 24; ++h)
            out << h << ',' << 5 << ',' << 4 << ',' << 6 << '\n';
    }
    const auto d = load_demand(dir / "d.csv");
    CHECK(d.hours() == 24);
    CHECK(d.check().empty());
    {
        std::ofstream out(dir / "bad.csv");
        out << "hour,central,min,max\n1,5,6,7\n";
    }
    CHECK_FALSE(load_demand(dir / "bad.csv").check().empty());
}

TEST_CASE("sample_fan")
{
    EcConfig cfg;
    SUBCASE("one day, one scenario")
    {
        HistoricalWindow w;
        w.days.push_back(synthetic_day(day("2023-11-28"), 100));
        const auto fan = sample_fan(w, cfg, day("2023-12-05"), 1, 7);
        REQUIRE(fan.size() == 1);
        CHECK(fan.probabilities[0] == 1.0);
        const auto& s = fan.scenarios[0];
        CHECK(s.da_price == w.days[0].da);
        CHECK(s.wind[3] == doctest::Approx(0.3 * cfg.wind_capacity));
        CHECK(s.pv[10] == doctest::Approx(0.5 * cfg.pv_capacity));
        CHECK(s.im_price[2] == w.days[0].im[2]);
        CHECK(fan.to_tree().scenario_count() == 1);
    }
    SUBCASE("deterministic, class-matched, with replacement")
    {
        HistoricalWindow w;
        Date d = day("2021-01-01");
        for (int k = 0; k < 700; ++k, d = next_day(d))
            w.days.push_back(synthetic_day(d, 50 + k * 0.1));
        const Date target = day("2023-12-05");   // a Tuesday
        const auto a = sample_fan(w, cfg, target, 750, 42);
        const auto b = sample_fan(w, cfg, target, 750, 42);
        const auto c = sample_fan(w, cfg, target, 750, 43);
        REQUIRE(a.size() == 750);
        CHECK(a.scenarios == b.scenarios);
        CHECK(a.source_days == b.source_days);
        CHECK(a.source_days != c.source_days);
        std::set<std::chrono::sys_days> distinct;
        for (const auto& s : a.source_days) {
            CHECK_FALSE(is_weekend(s));
            distinct.insert(std::chrono::sys_days(s));
        }
        // 750 draws from 500 weekdays must repeat
        CHECK(distinct.size() < 750);
        double total = 0;
        for (double p : a.probabilities)
            total += p;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        for (const auto& s : sample_fan(w, cfg, day("2023-12-09"), 50, 1).source_days)
            CHECK(is_weekend(s));
    }
    SUBCASE("history before a date")
    {
        HistoricalWindow w;
        Date d = day("2023-11-28");
        for (int k = 0; k < 10; ++k, d = next_day(d))
            w.days.push_back(synthetic_day(d, 50));
        const auto before = w.before(day("2023-12-01"));
        REQUIRE(before.days.size() == 3);
        CHECK(format_date(before.last()) == "2023-11-30");
        CHECK(w.before(day("2023-11-01")).empty());
    }
}

TEST_CASE("renewables client: cache and retries")
{
    TempDir dir("ninja");
    int calls = 0;
    int fail_first = 2;
    std::vector<std::string> paths;
    HttpGet transport = [&](const std::string& path, const std::vector<std::pair<std::string, std::string>>& hdrs) {
        ++calls;
        paths.push_back(path);
        CHECK(hdrs.at(0).second == "Token secret");
        if (calls <= fail_first)
            return HttpResponse{429, "rate limited"};
        return HttpResponse{200, ninja_body(8760, 2000.0)};
    };
    std::vector<long long> sleeps;
    auto sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); };
    RenewablesClient client(dir.path(), "secret", transport, RetryPolicy{4, std::chrono::milliseconds(100), 2.0}, sleep);

    const auto cf = client.fetch(40.4, -3.7, 2023, 2.0, RenewableKind::Wind);
    CHECK(cf.size() == 8760);
    CHECK(cf[5] == doctest::Approx(0.5));
    CHECK(calls == 3);
    CHECK(sleeps == std::vector<long long>{100, 200});
    CHECK(paths[0].find("/api/data/wind") == 0);
    CHECK(std::filesystem::exists(client.cache_path(40.4, -3.7, 2023, 2.0, RenewableKind::Wind)));

    // served from the cache, no network
    const int before = client.network_calls();
    CHECK(client.fetch(40.4, -3.7, 2023, 2.0, RenewableKind::Wind) == cf);
    CHECK(client.network_calls() == before);
    CHECK(calls == 3);

    // a different query goes to the network; a permanent 429 surfaces after the retries
    fail_first = 1000;
    sleeps.clear();
    CHECK_THROWS_WITH_AS(client.fetch(40.4, -3.7, 2023, 2.0, RenewableKind::Pv), doctest::Contains("429"),
                         std::runtime_error);
    CHECK(sleeps == std::vector<long long>{100, 200, 400, 800});

    // 4xx other than 429 is not retried
    int auth_calls = 0;
    RenewablesClient denied(
        dir / "other", "secret",
        [&](const std::string&, const std::vector<std::pair<std::string, std::string>>&) {
            ++auth_calls;
            return HttpResponse{403, "forbidden"};
        },
        RetryPolicy{}, sleep);
    CHECK_THROWS(denied.fetch(1, 1, 2023, 1, RenewableKind::Pv));
    CHECK(auth_calls == 1);
}

TEST_CASE("renewables response parsing")
{
    CHECK(parse_ninja_response(ninja_body(8760, 1000), 2023, 1000).size() == 8760);
    CHECK_THROWS(parse_ninja_response(ninja_body(8759, 1000), 2023, 1000));
    CHECK_THROWS(parse_ninja_response("{not json", 2023, 1000));
    CHECK_THROWS(parse_ninja_response(ninja_body(8760, 1000), 2024, 1000));
}
