#include "ecm/renewables.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

namespace ecm {

namespace {

std::mutex& cache_mutex()
{
    static std::mutex m;
    return m;
}

const char* kind_name(RenewableKind k) { return k == RenewableKind::Pv ? "pv" : "wind"; }

bool is_leap(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

std::vector<double> parse_ninja_response(const std::string& body, int year, double capacity_kw)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("malformed renewables response: ") + e.what());
    }
    if (!doc.contains("data") || !doc["data"].is_object())
        throw std::runtime_error("malformed renewables response: no data object");
    std::map<long long, double> series;
    for (const auto& [key, value] : doc["data"].items()) {
        if (!value.is_object() || !value.contains("electricity") || !value["electricity"].is_number())
            throw std::runtime_error("malformed renewables response: entry " + key + " has no electricity");
        long long stamp = 0;
        try {
            stamp = std::stoll(key);
        } catch (const std::exception&) {
            throw std::runtime_error("malformed renewables response: bad timestamp " + key);
        }
        series[stamp] = value["electricity"].get<double>();
    }
    const std::size_t expected = is_leap(year) ? 8784 : 8760;
    if (series.size() != expected)
        throw std::runtime_error("malformed renewables response: " + std::to_string(series.size()) +
                                 " hours, expected " + std::to_string(expected));
    std::vector<double> cf;
    cf.reserve(expected);
    for (const auto& [stamp, kw] : series)
        cf.push_back(capacity_kw > 0.0 ? std::clamp(kw / capacity_kw, 0.0, 1.0) : 0.0);
    return cf;
}

RenewablesClient::RenewablesClient(std::filesystem::path cache_dir, std::string token, HttpGet transport,
                                   RetryPolicy policy, Sleep sleep)
    : cache_dir_(std::move(cache_dir)), token_(std::move(token)), transport_(std::move(transport)),
      policy_(policy), sleep_(std::move(sleep))
{
    if (!sleep_)
        sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

RenewablesClient RenewablesClient::from_environment(RetryPolicy policy)
{
    const char* token = std::getenv(kNinjaTokenEnv);
    if (!token || !*token)
        throw std::runtime_error(std::string("set ") + kNinjaTokenEnv + " to a renewables.ninja API token");
    const char* cache = std::getenv(kCacheDirEnv);
    HttpGet transport = [](const std::string& path, const std::vector<std::pair<std::string, std::string>>& hdrs) {
        httplib::SSLClient cli("www.renewables.ninja", 443);
        cli.set_connection_timeout(30);
        cli.set_read_timeout(120);
        httplib::Headers headers;
        for (const auto& [k, v] : hdrs)
            headers.emplace(k, v);
        auto res = cli.Get(path, headers);
        if (!res)
            return HttpResponse{0, httplib::to_string(res.error())};
        return HttpResponse{res->status, res->body};
    };
    return RenewablesClient(cache && *cache ? cache : ".ecm-cache", token, std::move(transport), policy);
}

std::filesystem::path RenewablesClient::cache_path(double lat, double lon, int year, double capacity_mw,
                                                   RenewableKind kind) const
{
    return cache_dir_ / ("ninja_" + std::string(kind_name(kind)) + "_" + num(lat) + "_" + num(lon) + "_" +
                         std::to_string(year) + "_" + num(capacity_mw) + ".json");
}

std::vector<double> RenewablesClient::fetch(double lat, double lon, int year, double capacity_mw,
                                            RenewableKind kind)
{
    const auto path = cache_path(lat, lon, year, capacity_mw, kind);
    {
        std::lock_guard lock(cache_mutex());
        std::ifstream in(path);
        if (in) {
            try {
                return nlohmann::json::parse(in).at("capacity_factor").get<std::vector<double>>();
            } catch (const std::exception&) {
                // unreadable cache entry: fetch again
            }
        }
    }

    const double capacity_kw = capacity_mw * 1000.0;
    const std::string y = std::to_string(year);
    std::string query = "/api/data/" + std::string(kind_name(kind)) + "?lat=" + num(lat) + "&lon=" + num(lon) +
                        "&date_from=" + y + "-01-01&date_to=" + y + "-12-31&capacity=" + num(capacity_kw) +
                        "&format=json";
    if (kind == RenewableKind::Pv)
        query += "&dataset=merra2&system_loss=0.1&tracking=0&tilt=35&azim=180";
    else
        query += "&height=100&turbine=Vestas%20V90%202000";
    const std::vector<std::pair<std::string, std::string>> headers{{"Authorization", "Token " + token_}};

    auto delay = policy_.initial_delay;
    HttpResponse res;
    int attempts = 0;
    for (int attempt = 0;; ++attempt) {
        ++network_calls_;
        ++attempts;
        res = transport_(query, headers);
        const bool retryable = res.status == 0 || res.status == 429 || res.status >= 500;
        if (!retryable || attempt >= policy_.max_retries)
            break;
        sleep_(delay);
        delay = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(delay.count()) * policy_.backoff));
    }
    if (res.status != 200)
        throw std::runtime_error("renewables request failed with status " + std::to_string(res.status) + " after " +
                                 std::to_string(attempts) + " attempts: " + res.body.substr(0, 200));

    auto cf = parse_ninja_response(res.body, year, capacity_kw);
    std::lock_guard lock(cache_mutex());
    std::filesystem::create_directories(cache_dir_);
    std::ofstream out(path);
    out << nlohmann::json{{"kind", kind_name(kind)}, {"lat", lat},   {"lon", lon},
                          {"year", year},           {"capacity_mw", capacity_mw}, {"capacity_factor", cf}}
               .dump();
    return cf;
}

} // namespace ecm
