#include "mercator/http.hpp"

#include "mercator/error.hpp"

#include <httplib.h>

#include <thread>

namespace mercator::http {

Client::Client(std::string base_url, RetryPolicy policy) : base_url_(std::move(base_url)), policy_(policy) {
    while (!base_url_.empty() && base_url_.back() == '/') {
        base_url_.pop_back();
    }
    const auto scheme = base_url_.find("://");
    if (scheme == std::string::npos) {
        throw ConfigError("base URL without scheme: '" + base_url_ + "'");
    }
    const auto path_start = base_url_.find('/', scheme + 3);
    origin_ = base_url_.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : base_url_.substr(path_start);
    if (policy_.max_attempts < 1) {
        policy_.max_attempts = 1;
    }
}

template <typename Call>
Response Client::with_retry(const std::string& what, Call&& call) const {
    httplib::Client client(origin_);
    client.set_connection_timeout(policy_.timeout);
    client.set_read_timeout(policy_.timeout);
    client.set_write_timeout(policy_.timeout);
    client.set_follow_location(true);

    std::string last_failure;
    auto backoff = policy_.initial_backoff;
    for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
        httplib::Result res = call(client);
        if (!res) {
            last_failure = httplib::to_string(res.error());
        } else if (res->status == 429 || res->status >= 500) {
            last_failure = "HTTP " + std::to_string(res->status);
        } else {
            return {res->status, res->body};
        }
        if (attempt < policy_.max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw UpstreamError(what + " " + base_url_ + " failed after " + std::to_string(policy_.max_attempts) +
                        " attempt(s): " + last_failure);
}

Response Client::get(const std::string& path, const Params& params, const Headers& headers) const {
    std::string target = prefix_ + path;
    char sep = target.find('?') == std::string::npos ? '?' : '&';
    for (const auto& [key, value] : params) {
        target += sep + url_encode(key) + "=" + url_encode(value);
        sep = '&';
    }
    const httplib::Headers h(headers.begin(), headers.end());
    return with_retry("GET", [&](httplib::Client& c) { return c.Get(target, h); });
}

Response Client::post_json(const std::string& path, const std::string& body, const Headers& headers) const {
    const std::string target = prefix_ + path;
    const httplib::Headers h(headers.begin(), headers.end());
    return with_retry("POST", [&](httplib::Client& c) { return c.Post(target, h, body, "application/json"); });
}

std::string url_encode(const std::string& value) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    for (const unsigned char c : value) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0x0f]);
        }
    }
    return out;
}

}  // namespace mercator::http
