#include "mercator/markets.hpp"

#include "mercator/error.hpp"
#include "mercator/ipf.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>

namespace mercator::markets {

using json = nlohmann::json;

namespace {

MarketQuote quote_from_json(const json& j) {
    MarketQuote q;
    q.market_id = j.at("market_id").get<std::string>();
    q.p_yes = j.at("p_yes").get<double>();
    q.volume = j.value("volume", 0.0);
    q.resolution_date = parse_date(j.at("resolution_date").get<std::string>());
    if (j.contains("fetched_at")) {
        q.fetched_at = parse_timestamp(j.at("fetched_at").get<std::string>());
    }
    return q;
}

double as_number(const json& j) {
    if (j.is_number()) {
        return j.get<double>();
    }
    if (j.is_string()) {
        return std::stod(j.get<std::string>());
    }
    throw DataError("expected a number");
}

}  // namespace

void validate(const MarketQuote& q) {
    if (!(q.p_yes >= 0.0 && q.p_yes <= 1.0)) {
        throw DataError("market " + q.market_id + ": p_yes outside [0, 1]");
    }
    if (!(q.volume >= 0.0)) {
        throw DataError("market " + q.market_id + ": negative volume");
    }
}

FixtureQuoteSource::FixtureQuoteSource(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open quote fixture " + path.string());
    }
    try {
        const json doc = json::parse(in);
        for (const auto& item : doc.at("quotes")) {
            MarketQuote q = quote_from_json(item);
            validate(q);
            quotes_[q.market_id] = q;
        }
    } catch (const json::exception& e) {
        throw DataError("malformed quote fixture " + path.string() + ": " + e.what());
    }
}

MarketQuote FixtureQuoteSource::fetch_quote(const std::string& market_id) {
    const auto it = quotes_.find(market_id);
    if (it == quotes_.end()) {
        throw DataError("unknown market '" + market_id + "'");
    }
    return it->second;
}

PolymarketQuoteSource::PolymarketQuoteSource(std::string base_url, Timestamp now, http::RetryPolicy retry)
    : client_(std::move(base_url), retry), now_(now) {}

MarketQuote PolymarketQuoteSource::fetch_quote(const std::string& market_id) {
    const auto res = client_.get("/markets", {{"slug", market_id}});
    if (res.status == 404) {
        throw DataError("unknown market '" + market_id + "'");
    }
    if (res.status != 200) {
        throw UpstreamError("polymarket: HTTP " + std::to_string(res.status) + " for market '" + market_id + "'");
    }
    try {
        const json doc = json::parse(res.body);
        const json& markets = doc.is_array() ? doc : doc.at("markets");
        if (markets.empty()) {
            throw DataError("unknown market '" + market_id + "'");
        }
        const json& m = markets.front();
        // outcomePrices is a JSON-encoded string array, ["yes", "no"].
        const json prices = m.at("outcomePrices").is_string() ? json::parse(m.at("outcomePrices").get<std::string>())
                                                              : m.at("outcomePrices");
        MarketQuote q;
        q.market_id = market_id;
        q.p_yes = as_number(prices.at(0));
        q.volume = m.contains("volume") ? as_number(m.at("volume")) : 0.0;
        q.resolution_date = parse_date(m.at("endDate").get<std::string>().substr(0, 10));
        q.fetched_at = now_;
        validate(q);
        return q;
    } catch (const json::exception& e) {
        throw DataError("malformed polymarket response for '" + market_id + "': " + e.what());
    } catch (const std::invalid_argument&) {
        throw DataError("malformed polymarket response for '" + market_id + "': non-numeric field");
    }
}

double direct_probability(const MarketQuote& quote) {
    validate(quote);
    return quote.p_yes;
}

Inferred inferred_probability(const std::vector<ProxySpec>& proxies,
                              const std::map<std::string, MarketQuote>& quotes) {
    double omega = 0.0;
    for (const auto& proxy : proxies) {
        if (!(proxy.weight >= 0.0)) {
            throw ConfigError("proxy " + proxy.market_id + ": weight must be >= 0");
        }
        omega += proxy.weight;
    }
    if (!(omega > 0.0)) {
        throw ConfigError("proxy weights sum to 0; explanatory power must be positive");
    }
    if (omega > 1.0 + ipf::kWeightTolerance) {
        std::ostringstream msg;
        msg << "proxy weights sum to " << omega << "; explanatory power cannot exceed 1";
        throw ConfigError(msg.str());
    }
    double p = 0.0;
    double lo = 1.0;
    double hi = 0.0;
    for (const auto& proxy : proxies) {
        const auto it = quotes.find(proxy.market_id);
        if (it == quotes.end()) {
            throw DataError("missing quote for proxy market '" + proxy.market_id + "'");
        }
        validate(it->second);
        p += proxy.weight / omega * it->second.p_yes;
        if (proxy.weight > 0.0) {
            lo = std::min(lo, it->second.p_yes);
            hi = std::max(hi, it->second.p_yes);
        }
    }
    return {omega, std::clamp(p, lo, hi)};
}

double adjusted_probability(double omega, double p_inferred) { return omega * p_inferred; }

Decay resolution_decay(double p, double days_to_resolution, double lambda) {
    const double t_eff = std::max(0.0, kDecayWindowDays - std::max(0.0, days_to_resolution));
    const double factor = std::exp(-lambda * t_eff);
    return {factor, p * factor};
}

std::map<std::string, MarketQuote> fetch_quotes(QuoteSource& source, const std::vector<std::string>& market_ids) {
    std::vector<std::future<MarketQuote>> pending;
    pending.reserve(market_ids.size());
    for (const auto& id : market_ids) {
        pending.push_back(std::async(std::launch::async, [&source, id] { return source.fetch_quote(id); }));
    }
    std::map<std::string, MarketQuote> out;
    for (auto& f : pending) {
        MarketQuote q = f.get();
        out[q.market_id] = q;
    }
    return out;
}

CrowdEstimate estimate_crowd(const std::optional<std::string>& direct_market, const std::vector<ProxySpec>& proxies,
                             QuoteSource& source, Timestamp as_of) {
    CrowdEstimate est;
    std::vector<std::string> ids;
    if (direct_market) {
        ids.push_back(*direct_market);
    } else {
        for (const auto& p : proxies) {
            ids.push_back(p.market_id);
        }
    }
    if (ids.empty()) {
        throw NoSignal("no prediction market configured");
    }
    const auto quotes = fetch_quotes(source, ids);

    if (direct_market) {
        const MarketQuote& q = quotes.at(*direct_market);
        est.omega = 1.0;
        est.p_inferred = direct_probability(q);
        est.p_adjusted = est.p_inferred;
    } else {
        const Inferred inf = inferred_probability(proxies, quotes);
        est.omega = inf.omega;
        est.p_inferred = inf.p_inferred;
        est.p_adjusted = adjusted_probability(inf.omega, inf.p_inferred);
    }

    Date earliest = quotes.begin()->second.resolution_date;
    for (const auto& [id, q] : quotes) {
        earliest = std::min(earliest, q.resolution_date);
        est.quotes.push_back(q);
    }
    est.days_to_resolution = days_between(as_of, start_of(earliest));
    const Decay d = resolution_decay(est.p_adjusted, est.days_to_resolution);
    est.decay_factor = d.factor;
    est.p_final = d.p_final;
    return est;
}

}  // namespace mercator::markets
