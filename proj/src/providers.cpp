#include "mercator/corpus.hpp"

#include "mercator/error.hpp"

#include "json.hpp"

#include <cstdlib>
#include <fstream>

namespace mercator::corpus {

using json = nlohmann::json;

namespace {

std::string str_or_empty(const json& j, const char* key) {
    const auto it = j.find(key);
    return it != j.end() && it->is_string() ? it->get<std::string>() : std::string();
}

std::string join_body(const std::string& a, const std::string& b) {
    if (a.empty()) return b;
    if (b.empty() || b == a) return a;
    return a + "\n\n" + b;
}

std::string boolean_query(const std::vector<std::string>& keywords) {
    std::string q;
    for (const auto& k : keywords) {
        if (!q.empty()) q += " OR ";
        q += k.find(' ') == std::string::npos ? k : "\"" + k + "\"";
    }
    return q;
}

json parse_body(const std::string& provider, const http::Response& res) {
    if (res.status == 401 || res.status == 403) {
        throw CredentialError(provider + ": credentials rejected (HTTP " + std::to_string(res.status) + ")");
    }
    if (res.status != 200) {
        throw UpstreamError(provider + ": HTTP " + std::to_string(res.status));
    }
    try {
        return json::parse(res.body);
    } catch (const json::exception& e) {
        throw UpstreamError(provider + ": malformed JSON response: " + e.what());
    }
}

// NewsAPI "everything" article objects; also the fixture file format.
std::vector<Article> map_newsapi(const json& doc) {
    std::vector<Article> out;
    for (const auto& item : doc.value("articles", json::array())) {
        const std::string url = str_or_empty(item, "url");
        const std::string published = str_or_empty(item, "publishedAt");
        if (url.empty() || published.empty()) {
            continue;
        }
        std::string source;
        if (item.contains("source") && item.at("source").is_object()) {
            source = str_or_empty(item.at("source"), "name");
        }
        out.push_back(make_article(source, str_or_empty(item, "title"),
                                   join_body(str_or_empty(item, "description"), str_or_empty(item, "content")),
                                   parse_timestamp(published), url, ""));
    }
    return out;
}

class NewsApiProvider final : public NewsProvider {
public:
    explicit NewsApiProvider(const ProviderConfig& c) : name_(c.name), key_(c.api_key), client_(c.base_url, c.retry) {}
    const std::string& name() const override { return name_; }

    std::vector<Article> query(const EventSpec& event, std::size_t cap) override {
        std::vector<Article> out;
        for (int page = 1; out.size() < cap; ++page) {
            const http::Params params{{"q", boolean_query(event.keywords)},
                                      {"from", format_date(event.window.start)},
                                      {"to", format_date(event.window.end)},
                                      {"language", "en"},
                                      {"sortBy", "publishedAt"},
                                      {"pageSize", "100"},
                                      {"page", std::to_string(page)}};
            const json doc = parse_body(name_, client_.get("/v2/everything", params, {{"X-Api-Key", key_}}));
            if (doc.value("status", "ok") == "error") {
                const std::string code = doc.value("code", "");
                if (code.rfind("apiKey", 0) == 0) {
                    throw CredentialError(name_ + ": credentials rejected (" + code + ")");
                }
                throw UpstreamError(name_ + ": " + doc.value("message", code));
            }
            auto batch = map_newsapi(doc);
            if (batch.empty()) {
                break;
            }
            out.insert(out.end(), batch.begin(), batch.end());
            const auto total = doc.value("totalResults", 0);
            if (static_cast<std::size_t>(page) * 100 >= static_cast<std::size_t>(total)) {
                break;
            }
        }
        if (out.size() > cap) out.resize(cap);
        return out;
    }

private:
    std::string name_;
    std::string key_;
    http::Client client_;
};

class NewsDataProvider final : public NewsProvider {
public:
    explicit NewsDataProvider(const ProviderConfig& c) : name_(c.name), key_(c.api_key), client_(c.base_url, c.retry) {}
    const std::string& name() const override { return name_; }

    std::vector<Article> query(const EventSpec& event, std::size_t cap) override {
        std::vector<Article> out;
        std::string next;
        while (out.size() < cap) {
            http::Params params{{"apikey", key_},
                                {"q", boolean_query(event.keywords)},
                                {"from_date", format_date(event.window.start)},
                                {"to_date", format_date(event.window.end)},
                                {"language", "en"}};
            if (!next.empty()) params.emplace_back("page", next);
            const json doc = parse_body(name_, client_.get("/api/1/archive", params));
            if (doc.value("status", "success") == "error") {
                throw UpstreamError(name_ + ": " + doc.dump());
            }
            const json results = doc.value("results", json::array());
            for (const auto& item : results) {
                const std::string url = str_or_empty(item, "link");
                const std::string published = str_or_empty(item, "pubDate");
                if (url.empty() || published.empty()) continue;
                out.push_back(make_article(str_or_empty(item, "source_id"), str_or_empty(item, "title"),
                                           join_body(str_or_empty(item, "description"), str_or_empty(item, "content")),
                                           parse_timestamp(published), url, ""));
            }
            next = str_or_empty(doc, "nextPage");
            if (results.empty() || next.empty()) break;
        }
        if (out.size() > cap) out.resize(cap);
        return out;
    }

private:
    std::string name_;
    std::string key_;
    http::Client client_;
};

class MediaCloudProvider final : public NewsProvider {
public:
    explicit MediaCloudProvider(const ProviderConfig& c)
        : name_(c.name), key_(c.api_key), client_(c.base_url, c.retry) {}
    const std::string& name() const override { return name_; }

    std::vector<Article> query(const EventSpec& event, std::size_t cap) override {
        std::vector<Article> out;
        std::string token;
        while (out.size() < cap) {
            http::Params params{{"q", boolean_query(event.keywords)},
                                {"start", format_date(event.window.start)},
                                {"end", format_date(event.window.end)}};
            if (!token.empty()) params.emplace_back("pagination_token", token);
            const json doc = parse_body(
                name_, client_.get("/api/search/story-list", params, {{"Authorization", "Token " + key_}}));
            const json stories = doc.value("stories", json::array());
            for (const auto& item : stories) {
                const std::string url = str_or_empty(item, "url");
                const std::string published = str_or_empty(item, "publish_date");
                if (url.empty() || published.empty()) continue;
                // Story listings carry no text beyond the headline.
                out.push_back(make_article(str_or_empty(item, "media_name"), str_or_empty(item, "title"), "",
                                           parse_timestamp(published), url, ""));
            }
            token = str_or_empty(doc, "pagination_token");
            if (stories.empty() || token.empty()) break;
        }
        if (out.size() > cap) out.resize(cap);
        return out;
    }

private:
    std::string name_;
    std::string key_;
    http::Client client_;
};

// Reads <dir>/news/<event_id>.json in the NewsAPI response shape.
class FixtureProvider final : public NewsProvider {
public:
    explicit FixtureProvider(const ProviderConfig& c) : name_(c.name), dir_(c.base_url) {}
    const std::string& name() const override { return name_; }

    std::vector<Article> query(const EventSpec& event, std::size_t cap) override {
        const auto path = dir_ / "news" / (event.id + ".json");
        if (!std::filesystem::exists(path)) {
            return {};
        }
        std::ifstream in(path);
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw DataError("malformed news fixture " + path.string() + ": " + e.what());
        }
        auto out = map_newsapi(doc);
        if (out.size() > cap) out.resize(cap);
        return out;
    }

private:
    std::string name_;
    std::filesystem::path dir_;
};

}  // namespace

ProviderConfig provider_from_env(const std::string& name) {
    struct Known {
        const char* name;
        const char* key_var;
        const char* url_var;
        const char* default_url;
    };
    static constexpr Known kKnown[] = {
        {"newsapi", "NEWSAPI_KEY", "NEWSAPI_URL", "https://newsapi.org"},
        {"newsdata", "NEWSDATA_KEY", "NEWSDATA_URL", "https://newsdata.io"},
        {"mediacloud", "MEDIACLOUD_KEY", "MEDIACLOUD_URL", "https://search.mediacloud.org"},
    };
    for (const auto& k : kKnown) {
        if (name != k.name) continue;
        ProviderConfig c;
        c.name = name;
        const char* key = std::getenv(k.key_var);
        if (!key || !*key) {
            throw ConfigError(name + ": credential missing, set " + k.key_var);
        }
        c.api_key = key;
        const char* url = std::getenv(k.url_var);
        c.base_url = url && *url ? url : k.default_url;
        return c;
    }
    throw ConfigError("unknown news provider '" + name + "'");
}

std::unique_ptr<NewsProvider> make_provider(const ProviderConfig& config) {
    if (config.name == "newsapi") return std::make_unique<NewsApiProvider>(config);
    if (config.name == "newsdata") return std::make_unique<NewsDataProvider>(config);
    if (config.name == "mediacloud") return std::make_unique<MediaCloudProvider>(config);
    if (config.name == "fixture") return std::make_unique<FixtureProvider>(config);
    throw ConfigError("unknown news provider '" + config.name + "'");
}

}  // namespace mercator::corpus
