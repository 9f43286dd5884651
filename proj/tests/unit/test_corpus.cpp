#include "mercator/corpus.hpp"
#include "mercator/error.hpp"
#include "mercator/hash.hpp"

#include "doctest.h"
#include "events.hpp"
#include "gen.hpp"
#include "paths.hpp"
#include "server.hpp"

#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

using namespace mercator;
using namespace mercator::corpus;
using json = nlohmann::json;

namespace {

Article article(const std::string& title, const std::string& body, const std::string& when,
                const std::string& url = "") {
    return make_article("wire", title, body, parse_timestamp(when), url.empty() ? "https://news.test/" + title : url,
                        "us-tariffs");
}

json newsapi_item(const std::string& title, const std::string& desc, const std::string& when,
                  const std::string& url) {
    return {{"source", {{"id", nullptr}, {"name", "Wire"}}},
            {"title", title},
            {"description", desc},
            {"content", nullptr},
            {"url", url},
            {"publishedAt", when}};
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << content;
}

}  // namespace

TEST_CASE("article ids are a hash over url and title") {
    const auto a = article("Tariffs rise", "", "2025-07-01T00:00:00Z", "https://x.test/a");
    CHECK(a.id == sha256_hex(std::string("https://x.test/a") + '\x1f' + "Tariffs rise"));
    CHECK(a.id.size() == 64);
    CHECK(article_id("ab", "c") != article_id("a", "bc"));
}

TEST_CASE("dedupe examples") {
    CHECK(dedupe({}).empty());
    const auto a = article("A", "x", "2025-07-01T00:00:00Z");
    CHECK(dedupe({a, a}) == std::vector<Article>{a});
    const auto b = article("B", "y", "2025-07-02T00:00:00Z");
    auto a2 = article("A", "different body", "2025-07-03T00:00:00Z");  // same url+title as a
    const auto out = dedupe({a, b, a2});
    REQUIRE(out.size() == 2);
    CHECK(out[0] == a);
    CHECK(out[1] == b);
}

TEST_CASE("property: dedupe is idempotent and keeps first occurrences") {
    testgen::Gen g(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Article> xs;
        const int n = g.integer(0, 20);
        for (int i = 0; i < n; ++i) {
            xs.push_back(article("t" + std::to_string(g.integer(0, 6)), g.text(), "2025-07-01T00:00:00Z"));
        }
        const auto once = dedupe(xs);
        CHECK(dedupe(once) == once);
        std::set<std::string> ids;
        for (const auto& a : xs) ids.insert(a.id);
        CHECK(once.size() == ids.size());
    }
}

TEST_CASE("store and load corpus") {
    testpaths::TempDir tmp;
    store_corpus({}, tmp / "empty.jsonl");
    CHECK(load_corpus(tmp / "empty.jsonl").empty());

    std::vector<Article> five;
    for (int i = 0; i < 5; ++i) {
        five.push_back(article("Title " + std::to_string(i), "Body with \"quotes\"\nand lines",
                               "2025-07-0" + std::to_string(i + 1) + "T10:00:00Z"));
    }
    store_corpus(five, tmp / "five.jsonl");
    CHECK(load_corpus(tmp / "five.jsonl") == five);
    std::ifstream in(tmp / "five.jsonl");
    std::string first;
    std::getline(in, first);
    const json line = json::parse(first);
    for (const char* key : {"id", "source", "title", "body", "published_at", "url", "event_id"}) {
        CHECK(line.contains(key));
    }
    CHECK(line.at("published_at") == "2025-07-01T10:00:00Z");

    // Corrupt the third line.
    std::ifstream src(tmp / "five.jsonl");
    std::string all, l;
    int n = 0;
    while (std::getline(src, l)) {
        ++n;
        all += (n == 3 ? std::string("{\"id\": oops") : l) + "\n";
    }
    write_file(tmp / "bad.jsonl", all);
    CHECK_THROWS_WITH_AS(load_corpus(tmp / "bad.jsonl"), doctest::Contains("line 3"), DataError);
}

TEST_CASE("property: load(store(x)) == x for random articles") {
    testgen::Gen g(17);
    testpaths::TempDir tmp;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Article> xs;
        const int n = g.integer(0, 12);
        for (int i = 0; i < n; ++i) {
            Article a;
            a.source = g.text(10);
            a.title = g.text();
            a.body = g.text(200);
            a.url = "https://r.test/" + g.text(8);
            a.id = article_id(a.url, a.title);
            a.event_id = g.text(6);
            a.published_at = Timestamp{std::chrono::seconds{g.integer(0, 2000000000)}};
            xs.push_back(a);
        }
        store_corpus(xs, tmp / "r.jsonl");
        CHECK(load_corpus(tmp / "r.jsonl") == xs);
    }
}

TEST_CASE("corpus store serialises concurrent writers") {
    testpaths::TempDir tmp;
    CorpusStore store(tmp / "c.jsonl");
    std::vector<std::thread> writers;
    std::vector<std::vector<Article>> sets;
    for (int w = 0; w < 4; ++w) {
        std::vector<Article> xs;
        for (int i = 0; i < 50; ++i) xs.push_back(article("w" + std::to_string(w) + "-" + std::to_string(i), "b", "2025-07-01T00:00:00Z"));
        sets.push_back(xs);
    }
    for (int w = 0; w < 4; ++w) writers.emplace_back([&, w] { store.write(sets[static_cast<std::size_t>(w)]); });
    for (auto& t : writers) t.join();
    const auto read = store.read();
    CHECK(std::find(sets.begin(), sets.end(), read) != sets.end());
}

TEST_CASE("labels parse, validate and round-trip") {
    testpaths::TempDir tmp;
    write_file(tmp / "labels.csv", "article_id,outcome\nabc,YES\ndef, no \n\n");
    const auto labels = load_labels(tmp / "labels.csv");
    REQUIRE(labels.size() == 2);
    CHECK(labels[1].outcome == Outcome::No);
    store_labels(labels, tmp / "copy.csv");
    const auto again = load_labels(tmp / "copy.csv");
    CHECK(again.size() == 2);
    CHECK(again[0].article_id == "abc");

    write_file(tmp / "dup.csv", "article_id,outcome\nabc,YES\nabc,NO\n");
    CHECK_THROWS_WITH_AS(load_labels(tmp / "dup.csv"), doctest::Contains("line 3"), DataError);
    write_file(tmp / "bad.csv", "article_id,outcome\nabc,MAYBE\n");
    CHECK_THROWS_AS(load_labels(tmp / "bad.csv"), DataError);

    Article a = article("x", "y", "2025-07-01T00:00:00Z");
    CHECK_NOTHROW(check_labels({{a.id, Outcome::Yes}}, {a}));
    CHECK_THROWS_AS(check_labels({{"nope", Outcome::Yes}}, {a}), DataError);
}

TEST_CASE("event configs parse and validate") {
    testpaths::TempDir tmp;
    const json ok = {{"events",
                      {{{"id", "e1"},
                        {"statement", "Will X happen?"},
                        {"kind", "continuous"},
                        {"threshold", {{"value", 2.5}, {"direction", "at_most"}}},
                        {"resolution_date", "2025-12-31"},
                        {"keywords", {"inflation"}},
                        {"window", {{"start", "2025-06-01"}, {"end", "2025-07-31"}}},
                        {"macro_p_yes", 0.4},
                        {"ipf_weights", {{"lstm", 0.5}, {"sna", 0.0}, {"crowd", 0.2}, {"macro", 0.3}}},
                        {"proxies", {{{"market_id", "m1"}, {"weight", 0.4}}}},
                        {"calibration", {{"x_hat", 2.4}, {"scale", 0.2}}}}}}};
    write_file(tmp / "ok.json", ok.dump());
    const auto events = load_events(tmp / "ok.json");
    REQUIRE(events.size() == 1);
    const auto& e = events[0];
    CHECK(e.kind == EventKind::Continuous);
    CHECK(e.threshold->direction == calibration::Direction::AtMost);
    CHECK(e.summary_text == e.statement);
    CHECK(e.sna_weights.alpha == doctest::Approx(1.0 / 3.0));
    CHECK(e.calibration.x_hat == 2.4);
    CHECK(e.relevance_tau == 0.75);
    CHECK(e.article_cap == 500);
    CHECK(find_event(events, "e1").id == "e1");
    CHECK_THROWS_AS(find_event(events, "e2"), ConfigError);

    auto mutate = [&](auto&& f) {
        json doc = ok;
        f(doc["events"][0]);
        write_file(tmp / "bad.json", doc.dump());
        return tmp / "bad.json";
    };
    CHECK_THROWS_AS(load_events(mutate([](json& j) { j.erase("threshold"); })), ConfigError);
    CHECK_THROWS_AS(load_events(mutate([](json& j) { j["kind"] = "discrete"; })), ConfigError);
    CHECK_THROWS_AS(load_events(mutate([](json& j) { j["keywords"] = json::array(); })), ConfigError);
    CHECK_THROWS_AS(load_events(mutate([](json& j) { j["window"]["start"] = "2025-08-01"; })), ConfigError);
    CHECK_THROWS_AS(load_events(mutate([](json& j) { j["macro_p_yes"] = 1.2; })), ConfigError);
    CHECK_THROWS_WITH_AS(load_events(mutate([](json& j) { j["ipf_weights"]["macro"] = 0.4; })),
                         doctest::Contains("w_"), ConfigError);
    CHECK_THROWS_AS(load_events(mutate([](json& j) { j["proxies"][0]["weight"] = 1.4; })), ConfigError);
    CHECK_THROWS_AS(load_events(mutate([](json& j) { j["kind"] = "fuzzy"; })), ConfigError);
    CHECK_THROWS_AS(load_events(mutate([](json& j) { j["resolution_date"] = "soon"; })), ConfigError);
    CHECK_THROWS_AS(load_events(mutate([](json& j) { j.erase("macro_p_yes"); })), ConfigError);

    json dup = ok;
    dup["events"].push_back(ok["events"][0]);
    write_file(tmp / "dup.json", dup.dump());
    CHECK_THROWS_WITH_AS(load_events(tmp / "dup.json"), doctest::Contains("duplicate"), ConfigError);
    write_file(tmp / "junk.json", "{not json");
    CHECK_THROWS_AS(load_events(tmp / "junk.json"), ConfigError);
    CHECK_THROWS_AS(load_events(tmp / "missing.json"), ConfigError);
}

TEST_CASE("admissibility: keyword on whole words, window widened by one day") {
    const auto e = testevents::tariff_event();  // window 2025-06-01 .. 2025-07-31
    CHECK(admissible(e, article("New tariff on steel", "", "2025-07-01T00:00:00Z")));
    CHECK(admissible(e, article("Talks", "The eu responds", "2025-07-01T00:00:00Z")));
    CHECK_FALSE(admissible(e, article("Queue lengths", "nothing relevant", "2025-07-01T00:00:00Z")));
    CHECK(admissible(e, article("tariff", "", "2025-05-31T00:00:00Z")));
    CHECK_FALSE(admissible(e, article("tariff", "", "2025-05-30T23:59:59Z")));
    CHECK(admissible(e, article("tariff", "", "2025-08-01T23:59:59Z")));
    CHECK_FALSE(admissible(e, article("tariff", "", "2025-08-02T00:00:00Z")));
}

TEST_CASE("newsapi adapter against a fixture server") {
    testserver::FixtureServer server;
    std::string seen_key;
    std::string seen_query;
    server.routes().Get("/v2/everything", [&](const httplib::Request& req, httplib::Response& res) {
        seen_key = req.get_header_value("X-Api-Key");
        seen_query = req.get_param_value("q");
        const json doc = {{"status", "ok"},
                          {"totalResults", 3},
                          {"articles",
                           {newsapi_item("EU weighs response to new tariff", "Brussels reacts", "2025-07-10T08:00:00Z",
                                         "https://n.test/1"),
                            newsapi_item("Weather turns warm", "Sunny spells", "2025-07-11T08:00:00Z",
                                         "https://n.test/2"),
                            newsapi_item("Japan trade", "Tariff talks stall", "2025-07-12T08:00:00Z",
                                         "https://n.test/3")}}};
        res.set_content(doc.dump(), "application/json");
    });
    server.start();

    auto provider = make_provider({"newsapi", server.url(), "k-123", {1, std::chrono::milliseconds(1)}});
    const auto e = testevents::tariff_event();
    const auto articles = fetch_articles(e, *provider);
    CHECK(articles.size() == 2);
    CHECK(seen_key == "k-123");
    CHECK(seen_query == "tariff OR EU");
    for (const auto& a : articles) {
        CHECK(a.event_id == e.id);
        CHECK(a.source == "Wire");
        CHECK(a.id == article_id(a.url, a.title));
    }

    auto nothing = e;
    nothing.keywords = {"zeppelin"};
    CHECK(fetch_articles(nothing, *provider).empty());
}

TEST_CASE("newsapi adapter: credential rejection is fatal and names the provider") {
    testserver::FixtureServer server;
    int hits = 0;
    server.routes().Get("/v2/everything", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 401;
        res.set_content(R"({"status":"error","code":"apiKeyInvalid","message":"bad key"})", "application/json");
    });
    server.start();
    auto provider = make_provider({"newsapi", server.url(), "bad", {4, std::chrono::milliseconds(1)}});
    CHECK_THROWS_WITH_AS(fetch_articles(testevents::tariff_event(), *provider), doctest::Contains("newsapi"),
                         CredentialError);
    CHECK(hits == 1);
}

TEST_CASE("newsapi adapter retries transient failures") {
    testserver::FixtureServer server;
    int hits = 0;
    server.routes().Get("/v2/everything", [&](const httplib::Request&, httplib::Response& res) {
        if (++hits < 3) {
            res.status = 429;
            return;
        }
        res.set_content(json{{"status", "ok"}, {"totalResults", 0}, {"articles", json::array()}}.dump(),
                        "application/json");
    });
    server.start();
    auto provider = make_provider({"newsapi", server.url(), "k", {4, std::chrono::milliseconds(1)}});
    CHECK(fetch_articles(testevents::tariff_event(), *provider).empty());
    CHECK(hits == 3);
}

TEST_CASE("newsapi adapter paginates up to the cap") {
    testserver::FixtureServer server;
    server.routes().Get("/v2/everything", [&](const httplib::Request& req, httplib::Response& res) {
        const int page = std::stoi(req.get_param_value("page"));
        json items = json::array();
        for (int i = 0; i < 100; ++i) {
            const int n = (page - 1) * 100 + i;
            items.push_back(newsapi_item("tariff story " + std::to_string(n), "", "2025-07-10T08:00:00Z",
                                         "https://n.test/" + std::to_string(n)));
        }
        res.set_content(json{{"status", "ok"}, {"totalResults", 1000}, {"articles", items}}.dump(),
                        "application/json");
    });
    server.start();
    auto provider = make_provider({"newsapi", server.url(), "k", {1, std::chrono::milliseconds(1)}});
    auto e = testevents::tariff_event();
    e.article_cap = 250;
    const auto articles = fetch_articles(e, *provider);
    CHECK(articles.size() == 250);
    CHECK(dedupe(articles).size() == 250);
}

TEST_CASE("newsdata and mediacloud adapters map their shapes") {
    testserver::FixtureServer server;
    std::string auth;
    server.routes().Get("/api/1/archive", [&](const httplib::Request& req, httplib::Response& res) {
        const bool second = req.has_param("page");
        json results = json::array();
        results.push_back({{"title", second ? "EU tariff plan" : "New tariff"},
                           {"link", second ? "https://d.test/2" : "https://d.test/1"},
                           {"description", "desc"},
                           {"content", "body"},
                           {"pubDate", "2025-07-10 08:00:00"},
                           {"source_id", "wire"}});
        json doc = {{"status", "success"}, {"results", results}};
        doc["nextPage"] = second ? json(nullptr) : json("p2");
        res.set_content(doc.dump(), "application/json");
    });
    server.routes().Get("/api/search/story-list", [&](const httplib::Request& req, httplib::Response& res) {
        auth = req.get_header_value("Authorization");
        const json doc = {{"stories",
                           {{{"title", "Tariff headline"},
                             {"url", "https://m.test/1"},
                             {"publish_date", "2025-07-09"},
                             {"media_name", "paper"}}}},
                          {"pagination_token", nullptr}};
        res.set_content(doc.dump(), "application/json");
    });
    server.start();
    const auto e = testevents::tariff_event();

    auto nd = make_provider({"newsdata", server.url(), "k", {1, std::chrono::milliseconds(1)}});
    const auto a = fetch_articles(e, *nd);
    REQUIRE(a.size() == 2);
    CHECK(a[0].body == "desc\n\nbody");
    CHECK(format_timestamp(a[0].published_at) == "2025-07-10T08:00:00Z");

    auto mc = make_provider({"mediacloud", server.url(), "tok", {1, std::chrono::milliseconds(1)}});
    const auto m = fetch_articles(e, *mc);
    REQUIRE(m.size() == 1);
    CHECK(m[0].body.empty());
    CHECK(auth == "Token tok");
}

TEST_CASE("fetch_all merges providers and dedupes") {
    testpaths::TempDir tmp;
    const json doc = {{"status", "ok"},
                      {"articles",
                       {newsapi_item("EU tariff", "x", "2025-07-01T00:00:00Z", "https://f.test/1"),
                        newsapi_item("EU tariff", "x", "2025-07-01T00:00:00Z", "https://f.test/1"),
                        newsapi_item("tariff outside window", "x", "2025-09-01T00:00:00Z", "https://f.test/2")}}};
    write_file(tmp / "news" / "us-tariffs.json", doc.dump());
    auto p1 = make_provider({"fixture", tmp.path().string(), "", {}});
    auto p2 = make_provider({"fixture", tmp.path().string(), "", {}});
    const auto all = fetch_all(testevents::tariff_event(), {p1.get(), p2.get()});
    CHECK(all.size() == 1);

    auto other = testevents::tariff_event();
    other.id = "no-fixture";
    CHECK(fetch_all(other, {p1.get()}).empty());
}

TEST_CASE("property: fetched articles always fall inside the widened window") {
    testgen::Gen g(23);
    testpaths::TempDir tmp;
    json items = json::array();
    const Timestamp base = parse_timestamp("2025-04-01T00:00:00Z");
    for (int i = 0; i < 300; ++i) {
        const Timestamp t = base + std::chrono::seconds{g.integer(0, 200 * 86400)};
        items.push_back(newsapi_item("tariff " + std::to_string(i), "", format_timestamp(t),
                                     "https://w.test/" + std::to_string(i)));
    }
    write_file(tmp / "news" / "us-tariffs.json", json{{"articles", items}}.dump());
    auto p = make_provider({"fixture", tmp.path().string(), "", {}});
    const auto e = testevents::tariff_event();
    const auto got = fetch_articles(e, *p);
    CHECK_FALSE(got.empty());
    for (const auto& a : got) {
        CHECK(a.published_at >= start_of(e.window.start) - std::chrono::days{1});
        CHECK(a.published_at < start_of(e.window.end) + std::chrono::days{2});
    }
}

TEST_CASE("provider credentials come from the environment") {
    unsetenv("NEWSDATA_KEY");
    CHECK_THROWS_WITH_AS(provider_from_env("newsdata"), doctest::Contains("NEWSDATA_KEY"), ConfigError);
    setenv("NEWSDATA_KEY", "abc", 1);
    setenv("NEWSDATA_URL", "http://127.0.0.1:9", 1);
    const auto c = provider_from_env("newsdata");
    CHECK(c.api_key == "abc");
    CHECK(c.base_url == "http://127.0.0.1:9");
    unsetenv("NEWSDATA_KEY");
    unsetenv("NEWSDATA_URL");
    CHECK_THROWS_AS(provider_from_env("bing"), ConfigError);
    CHECK_THROWS_AS(make_provider({"bing", "", "", {}}), ConfigError);
}
