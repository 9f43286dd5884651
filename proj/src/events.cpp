#include "mercator/corpus.hpp"
#include "mercator/error.hpp"

#include "json.hpp"

#include <fstream>
#include <set>

namespace mercator::corpus {

using json = nlohmann::json;

namespace {

EventKind parse_kind(const std::string& s) {
    if (s == "discrete" || s == "binary") return EventKind::Discrete;
    if (s == "continuous") return EventKind::Continuous;
    throw ConfigError("unknown event kind '" + s + "'");
}

EventSpec event_from_json(const json& j) {
    EventSpec e;
    e.id = j.at("id").get<std::string>();
    e.statement = j.at("statement").get<std::string>();
    e.kind = parse_kind(j.at("kind").get<std::string>());
    if (j.contains("threshold") && !j.at("threshold").is_null()) {
        const json& t = j.at("threshold");
        e.threshold = calibration::ThresholdSpec{
            t.at("value").get<double>(), calibration::parse_direction(t.at("direction").get<std::string>())};
    }
    e.resolution_date = parse_date(j.at("resolution_date").get<std::string>());
    e.keywords = j.at("keywords").get<std::vector<std::string>>();
    e.window.start = parse_date(j.at("window").at("start").get<std::string>());
    e.window.end = parse_date(j.at("window").at("end").get<std::string>());
    e.summary_text = j.value("summary_text", e.statement);
    e.macro_p_yes = j.at("macro_p_yes").get<double>();

    const json& iw = j.at("ipf_weights");
    e.ipf_weights = {iw.value("lstm", 0.0), iw.value("sna", 0.0), iw.value("crowd", 0.0), iw.value("macro", 0.0)};
    if (j.contains("sna_weights")) {
        const json& sw = j.at("sna_weights");
        e.sna_weights = {sw.value("alpha", 0.0), sw.value("beta", 0.0), sw.value("gamma", 0.0)};
    } else {
        e.sna_weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    }

    if (j.contains("market") && !j.at("market").is_null()) {
        e.market = j.at("market").get<std::string>();
    }
    for (const auto& p : j.value("proxies", json::array())) {
        e.proxies.push_back({p.at("market_id").get<std::string>(), p.at("weight").get<double>()});
    }
    if (j.contains("calibration")) {
        const json& c = j.at("calibration");
        if (c.contains("x_hat") && !c.at("x_hat").is_null()) {
            e.calibration.x_hat = c.at("x_hat").get<double>();
        }
        e.calibration.scale = c.value("scale", 1.0);
        e.calibration.k = c.value("k", calibration::kDefaultSharpness);
    }
    e.relevance_tau = j.value("relevance_tau", kDefaultRelevanceTau);
    e.article_cap = j.value("article_cap", kDefaultArticleCap);
    e.zeroshot_budget = j.value("zeroshot_budget", kDefaultZeroShotBudget);
    return e;
}

}  // namespace

std::vector<std::string> validate(const EventSpec& e) {
    std::vector<std::string> out;
    if (e.id.empty()) out.push_back("id is empty");
    if (e.statement.empty()) out.push_back("statement is empty");
    if (e.keywords.empty()) out.push_back("keywords must be nonempty");
    for (const auto& k : e.keywords) {
        if (k.empty()) out.push_back("empty keyword");
    }
    if (e.window.start > e.window.end) out.push_back("window start is after window end");
    if (e.kind == EventKind::Continuous && !e.threshold) out.push_back("continuous event needs a threshold");
    if (e.kind == EventKind::Discrete && e.threshold) out.push_back("discrete event must not carry a threshold");
    if (!(e.macro_p_yes >= 0.0 && e.macro_p_yes <= 1.0)) out.push_back("macro_p_yes outside [0, 1]");
    if (!(e.relevance_tau > 0.0 && e.relevance_tau <= 1.0)) out.push_back("relevance_tau outside (0, 1]");
    if (e.zeroshot_budget < 1) out.push_back("zeroshot_budget must be >= 1");
    if (!(e.calibration.scale > 0.0)) out.push_back("calibration scale must be positive");
    for (const auto& d : ipf::validate_weights(e.ipf_weights)) out.push_back("ipf_weights: " + d);
    for (const auto& d : ipf::validate_weights(e.sna_weights)) out.push_back("sna_weights: " + d);

    double omega = 0.0;
    for (const auto& p : e.proxies) {
        if (!(p.weight >= 0.0)) out.push_back("proxy " + p.market_id + " has negative weight");
        omega += p.weight;
    }
    if (!e.proxies.empty() && omega > 1.0 + ipf::kWeightTolerance) {
        out.push_back("proxy weights sum to " + std::to_string(omega) + " > 1");
    }
    if (!e.proxies.empty() && !(omega > 0.0)) out.push_back("proxy weights sum to 0");
    return out;
}

std::vector<EventSpec> load_events(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open event config " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("event config " + path.string() + " is not valid JSON: " + e.what());
    }
    const json& list = doc.is_array() ? doc : doc.at("events");
    std::vector<EventSpec> events;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < list.size(); ++i) {
        EventSpec e;
        try {
            e = event_from_json(list[i]);
        } catch (const json::exception& ex) {
            throw ConfigError("event #" + std::to_string(i + 1) + " in " + path.string() + ": " + ex.what());
        } catch (const DataError& ex) {
            throw ConfigError("event #" + std::to_string(i + 1) + " in " + path.string() + ": " + ex.what());
        }
        const auto problems = validate(e);
        if (!problems.empty()) {
            std::string joined;
            for (const auto& p : problems) joined += (joined.empty() ? "" : "; ") + p;
            throw ConfigError("event '" + e.id + "': " + joined);
        }
        if (!seen.insert(e.id).second) {
            throw ConfigError("duplicate event id '" + e.id + "'");
        }
        events.push_back(std::move(e));
    }
    return events;
}

const EventSpec& find_event(const std::vector<EventSpec>& events, const std::string& id) {
    for (const auto& e : events) {
        if (e.id == id) return e;
    }
    throw ConfigError("no event with id '" + id + "' in config");
}

const char* to_string(Outcome o) { return o == Outcome::Yes ? "YES" : "NO"; }
const char* to_string(EventKind k) { return k == EventKind::Discrete ? "discrete" : "continuous"; }

}  // namespace mercator::corpus
