#pragma once

#include <chrono>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mercator::http {

struct RetryPolicy {
    int max_attempts = 4;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{30};
};

using Headers = std::multimap<std::string, std::string>;
using Params = std::vector<std::pair<std::string, std::string>>;

struct Response {
    int status = 0;
    std::string body;
};

/// Thin blocking client over one base URL ("scheme://host[:port][/prefix]").
/// Connection failures, HTTP 429 and 5xx are retried with exponential
/// backoff; after the last attempt an UpstreamError is thrown. Any other
/// status is returned to the caller.
class Client {
public:
    explicit Client(std::string base_url, RetryPolicy policy = {});

    Response get(const std::string& path, const Params& params = {}, const Headers& headers = {}) const;
    Response post_json(const std::string& path, const std::string& body, const Headers& headers = {}) const;

    const std::string& base_url() const { return base_url_; }

private:
    template <typename Call>
    Response with_retry(const std::string& what, Call&& call) const;

    std::string base_url_;
    std::string origin_;
    std::string prefix_;
    RetryPolicy policy_;
};

/// application/x-www-form-urlencoded style escaping for query values.
std::string url_encode(const std::string& value);

}  // namespace mercator::http
