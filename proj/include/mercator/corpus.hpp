#pragma once

#include "mercator/calibration.hpp"
#include "mercator/http.hpp"
#include "mercator/ipf.hpp"
#include "mercator/markets.hpp"
#include "mercator/time.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace mercator::corpus {

inline constexpr std::size_t kDefaultArticleCap = 500;
inline constexpr double kDefaultRelevanceTau = 0.75;
inline constexpr std::size_t kDefaultZeroShotBudget = 50;

enum class EventKind { Discrete, Continuous };

enum class Outcome { Yes, No };

/// Closed calendar-day window [start, end].
struct Window {
    Date start{};
    Date end{};
};

/// Analyst-supplied point forecast for a continuous event.
struct CalibrationInput {
    std::optional<double> x_hat;
    double scale = 1.0;
    double k = calibration::kDefaultSharpness;
};

struct EventSpec {
    std::string id;
    std::string statement;
    EventKind kind = EventKind::Discrete;
    std::optional<calibration::ThresholdSpec> threshold;
    Date resolution_date{};
    std::vector<std::string> keywords;
    Window window;
    std::string summary_text;
    double macro_p_yes = 0.5;
    ipf::IpfWeights ipf_weights;
    ipf::SnaWeights sna_weights;

    std::optional<std::string> market;
    std::vector<markets::ProxySpec> proxies;
    CalibrationInput calibration;
    double relevance_tau = kDefaultRelevanceTau;
    std::size_t article_cap = kDefaultArticleCap;
    std::size_t zeroshot_budget = kDefaultZeroShotBudget;
};

/// One message per violated invariant; empty when the event is valid.
std::vector<std::string> validate(const EventSpec& event);

/// Parses an event config file: {"events": [...]} or a bare array.
/// Every event is validated; the first failure throws ConfigError naming
/// the event.
std::vector<EventSpec> load_events(const std::filesystem::path& path);
const EventSpec& find_event(const std::vector<EventSpec>& events, const std::string& id);

struct Article {
    std::string id;
    std::string source;
    std::string title;
    std::string body;
    Timestamp published_at{};
    std::string url;
    std::string event_id;

    bool operator==(const Article&) const = default;
};

struct Label {
    std::string article_id;
    Outcome outcome = Outcome::Yes;
};

/// Hex SHA-256 over url and title, separated by a unit separator byte.
std::string article_id(const std::string& url, const std::string& title);

/// Builds an article with its id filled in.
Article make_article(std::string source, std::string title, std::string body, Timestamp published_at,
                     std::string url, std::string event_id);

/// Stable; keeps the first occurrence of each id.
std::vector<Article> dedupe(const std::vector<Article>& articles);

// ---------------------------------------------------------------------------
// Providers

struct ProviderConfig {
    std::string name;      // newsapi | newsdata | mediacloud | fixture
    std::string base_url;  // for fixture: the fixture directory
    std::string api_key;
    http::RetryPolicy retry;
};

/// Reads credentials from NEWSAPI_KEY / NEWSDATA_KEY / MEDIACLOUD_KEY and
/// optional base URL overrides from <NAME>_URL. Throws ConfigError when the
/// key is missing.
ProviderConfig provider_from_env(const std::string& name);

class NewsProvider {
public:
    virtual ~NewsProvider() = default;
    virtual const std::string& name() const = 0;
    /// Raw provider results for the event's query; filtering happens in
    /// fetch_articles.
    virtual std::vector<Article> query(const EventSpec& event, std::size_t cap) = 0;
};

std::unique_ptr<NewsProvider> make_provider(const ProviderConfig& config);

/// Articles from `provider` that fall inside the event window (widened by
/// one day of skew on each side) and contain at least one keyword, capped
/// at event.article_cap.
std::vector<Article> fetch_articles(const EventSpec& event, NewsProvider& provider);

/// Queries several providers concurrently, concatenates in provider order,
/// then dedupes.
std::vector<Article> fetch_all(const EventSpec& event, const std::vector<NewsProvider*>& providers);

/// Applies the keyword/window rule to already-mapped articles.
bool admissible(const EventSpec& event, const Article& article);

// ---------------------------------------------------------------------------
// Storage

/// JSONL, one Article object per line. Writes go to a temporary sibling
/// and are renamed into place, so readers never see partial files.
void store_corpus(const std::vector<Article>& articles, const std::filesystem::path& path);
std::vector<Article> load_corpus(const std::filesystem::path& path);

/// Serialises writers to one corpus file.
class CorpusStore {
public:
    explicit CorpusStore(std::filesystem::path path) : path_(std::move(path)) {}

    void write(const std::vector<Article>& articles);
    std::vector<Article> read() const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::mutex write_mutex_;
};

/// CSV `article_id,outcome` with outcome YES or NO. Duplicate ids are an
/// error.
std::vector<Label> load_labels(const std::filesystem::path& path);
void store_labels(const std::vector<Label>& labels, const std::filesystem::path& path);

/// Throws DataError if a label references an article not in `articles`.
void check_labels(const std::vector<Label>& labels, const std::vector<Article>& articles);

const char* to_string(Outcome o);
const char* to_string(EventKind k);

}  // namespace mercator::corpus
