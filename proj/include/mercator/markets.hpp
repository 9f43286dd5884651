#pragma once

#include "mercator/http.hpp"
#include "mercator/time.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mercator::markets {

/// Half-life of one week: the decay acts only inside the final seven days.
inline const double kResolutionDecay = std::log(2.0) / 7.0;
inline constexpr double kDecayWindowDays = 7.0;

struct MarketQuote {
    std::string market_id;
    double p_yes = 0.0;
    double volume = 0.0;
    Date resolution_date{};
    Timestamp fetched_at{};
};

struct ProxySpec {
    std::string market_id;
    double weight = 0.0;
};

struct CrowdEstimate {
    double omega = 1.0;
    double p_inferred = 0.0;
    double p_adjusted = 0.0;
    double days_to_resolution = 0.0;
    double decay_factor = 1.0;
    double p_final = 0.0;
    std::vector<MarketQuote> quotes;
};

class QuoteSource {
public:
    virtual ~QuoteSource() = default;
    virtual MarketQuote fetch_quote(const std::string& market_id) = 0;
};

/// Quotes from a JSON file: {"quotes": [{market_id, p_yes, volume,
/// resolution_date, fetched_at}]}.
class FixtureQuoteSource final : public QuoteSource {
public:
    explicit FixtureQuoteSource(const std::filesystem::path& path);
    MarketQuote fetch_quote(const std::string& market_id) override;

private:
    std::map<std::string, MarketQuote> quotes_;
};

/// Polymarket Gamma API: GET {base}/markets?slug=<market_id>.
class PolymarketQuoteSource final : public QuoteSource {
public:
    PolymarketQuoteSource(std::string base_url, Timestamp now, http::RetryPolicy retry = {});
    MarketQuote fetch_quote(const std::string& market_id) override;

private:
    http::Client client_;
    Timestamp now_;
};

/// Validates a quote; throws DataError naming the market.
void validate(const MarketQuote& q);

double direct_probability(const MarketQuote& quote);

struct Inferred {
    double omega = 0.0;
    double p_inferred = 0.0;
};

/// omega = sum of proxy weights (must lie in (0, 1]); p_inferred is the
/// omega-normalised weighted mean of the proxy probabilities.
Inferred inferred_probability(const std::vector<ProxySpec>& proxies,
                              const std::map<std::string, MarketQuote>& quotes);

/// omega * p_inferred.
double adjusted_probability(double omega, double p_inferred);

struct Decay {
    double factor = 1.0;
    double p_final = 0.0;
};

/// factor = exp(-lambda * max(0, 7 - days_to_resolution)). Negative days
/// (already past resolution) count as resolution day.
Decay resolution_decay(double p, double days_to_resolution, double lambda = kResolutionDecay);

/// Fetches every quote (concurrently) and returns them keyed by id.
std::map<std::string, MarketQuote> fetch_quotes(QuoteSource& source, const std::vector<std::string>& market_ids);

/// Full crowd estimate. With a direct market omega is 1 and the proxies
/// are ignored. The decay uses the earliest resolution date among the
/// contributing markets. Throws NoSignal when no market is configured.
CrowdEstimate estimate_crowd(const std::optional<std::string>& direct_market, const std::vector<ProxySpec>& proxies,
                             QuoteSource& source, Timestamp as_of);

}  // namespace mercator::markets
