#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace ecm {

enum class RenewableKind { Pv, Wind };

struct HttpResponse {
    int status = 0;          // 0 when the request never got an answer
    std::string body;
};

/// GET of `path_and_query` with the given headers against the service host.
using HttpGet = std::function<HttpResponse(const std::string& path_and_query,
                                           const std::vector<std::pair<std::string, std::string>>& headers)>;

struct RetryPolicy {
    int max_retries = 4;
    std::chrono::milliseconds initial_delay{1000};
    double backoff = 2.0;
};

/// Environment variables read by `RenewablesClient::from_environment`.
inline constexpr const char* kNinjaTokenEnv = "ECM_NINJA_TOKEN";
inline constexpr const char* kCacheDirEnv = "ECM_CACHE_DIR";

/// Client for the renewables.ninja point API returning hourly capacity
/// factors for one calendar year. Every answer is cached as a JSON file in
/// the cache directory and served from there on later calls. 429 and 5xx
/// answers (and transport failures) are retried with exponential backoff.
class RenewablesClient {
public:
    using Sleep = std::function<void(std::chrono::milliseconds)>;

    RenewablesClient(std::filesystem::path cache_dir, std::string token, HttpGet transport,
                     RetryPolicy policy = {}, Sleep sleep = {});

    /// Client talking HTTPS to www.renewables.ninja, configured from the
    /// environment (token required, cache dir defaults to ./.ecm-cache).
    static RenewablesClient from_environment(RetryPolicy policy = {});

    /// 8760 (or 8784) hourly capacity factors in [0, 1].
    std::vector<double> fetch(double lat, double lon, int year, double capacity_mw, RenewableKind kind);

    std::filesystem::path cache_path(double lat, double lon, int year, double capacity_mw,
                                     RenewableKind kind) const;

    int network_calls() const { return network_calls_; }

private:
    std::filesystem::path cache_dir_;
    std::string token_;
    HttpGet transport_;
    RetryPolicy policy_;
    Sleep sleep_;
    int network_calls_ = 0;
};

/// Extracts capacity factors from a service answer; throws on malformed JSON
/// or a wrong number of hours for `year`.
std::vector<double> parse_ninja_response(const std::string& body, int year, double capacity_kw);

} // namespace ecm
