#include "mercator/embedding.hpp"
#include "mercator/error.hpp"

#include "doctest.h"
#include "embed_server.hpp"
#include "gen.hpp"
#include "paths.hpp"

#include <fstream>
#include <set>

using namespace mercator;
using namespace mercator::embedding;
using json = nlohmann::json;

TEST_CASE("stub embedder contract") {
    StubEmbedder stub;
    const auto v = embed({"a"}, stub);
    REQUIRE(v.size() == 1);
    CHECK(v[0].size() == 768);
    CHECK(v[0].norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(embed({"same text"}, stub)[0] == embed({"same text"}, stub)[0]);
    CHECK(stub_embed("Same, TEXT!") == stub_embed("same text"));
}

TEST_CASE("stub embedder maps empty text to a seed basis vector") {
    const Eigen::VectorXd e = stub_embed("", 16, 35);
    CHECK(e.norm() == 1.0);
    CHECK(e[35 % 16] == 1.0);
    CHECK(e.cwiseAbs().sum() == 1.0);
    CHECK(stub_embed("  ,;  ", 16, 35) == e);
}

TEST_CASE("stub embedder: shared tokens raise similarity") {
    const double near = cosine_similarity(stub_embed("tariff tariff EU"), stub_embed("tariff EU"));
    const double far = cosine_similarity(stub_embed("tariff EU"), stub_embed("weather"));
    CHECK(near > far);
}

TEST_CASE("cosine similarity examples") {
    Eigen::VectorXd v(3);
    v << 0.3, -1.2, 2.0;
    CHECK(cosine_similarity(v, v) == doctest::Approx(1.0).epsilon(1e-15));
    Eigen::VectorXd ex = Eigen::VectorXd::Zero(5), ey = Eigen::VectorXd::Zero(5);
    ex[0] = 1.0;
    ey[1] = 1.0;
    CHECK(cosine_similarity(ex, ey) == 0.0);
    Eigen::VectorXd d = ex;
    d[1] = 1.0;
    CHECK(cosine_similarity(d, ex) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(cosine_similarity(Eigen::VectorXd::Zero(5), ex), DataError);
    CHECK_THROWS_AS(cosine_similarity(Eigen::VectorXd::Ones(4), ex), DataError);
}

TEST_CASE("property: cosine similarity is symmetric, bounded and scale invariant") {
    testgen::Gen g(31);
    for (int trial = 0; trial < 500; ++trial) {
        const Eigen::Index d = g.integer(1, 40);
        const Eigen::VectorXd a = g.gaussian_vector(d);
        const Eigen::VectorXd b = g.gaussian_vector(d);
        const double c = g.uniform(1e-3, 1e3);
        CHECK(cosine_similarity(a, b) == cosine_similarity(b, a));
        CHECK(std::abs(cosine_similarity(a, b)) <= 1.0 + 1e-12);
        CHECK(cosine_similarity(a, c * a) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

namespace {
std::vector<Embedding> with_similarities(const std::vector<double>& sims, Eigen::VectorXd& event) {
    // event = e_0; item i = s e_0 + sqrt(1 - s^2) e_1 has cosine exactly s (up to rounding).
    event = Eigen::VectorXd::Zero(4);
    event[0] = 1.0;
    std::vector<Embedding> out;
    for (std::size_t i = 0; i < sims.size(); ++i) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(4);
        v[0] = sims[i];
        v[1] = std::sqrt(1.0 - sims[i] * sims[i]);
        out.push_back({"a" + std::to_string(i), v});
    }
    return out;
}
}  // namespace

TEST_CASE("relevance filter keeps the inclusive boundary") {
    Eigen::VectorXd event;
    const auto items = with_similarities({0.8, 0.74, 0.75}, event);
    const auto r = relevance_filter(event, items, 0.75);
    REQUIRE(r.kept.size() == 2);
    CHECK(r.kept[0].article_id == "a0");
    CHECK(r.kept[1].article_id == "a2");
    CHECK(r.dropped == 1);
    CHECK(r.similarities.size() == 3);

    CHECK(relevance_filter(event, items, 1e-9).kept.size() == 3);
    CHECK_THROWS_AS(relevance_filter(event, items, 0.0), ConfigError);
    CHECK_THROWS_AS(relevance_filter(event, items, 1.1), ConfigError);
}

TEST_CASE("property: relevance filter is a monotone subset") {
    testgen::Gen g(41);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXd event = g.gaussian_vector(8);
        std::vector<Embedding> items;
        for (int i = 0; i < 30; ++i) items.push_back({"x" + std::to_string(i), g.gaussian_vector(8)});
        const double t1 = g.uniform(0.01, 1.0);
        const double t2 = g.uniform(t1, 1.0);
        const auto loose = relevance_filter(event, items, t1);
        const auto tight = relevance_filter(event, items, t2);
        CHECK(tight.kept.size() <= loose.kept.size());
        CHECK(loose.kept.size() + loose.dropped == items.size());
        std::set<std::string> loose_ids;
        for (const auto& e : loose.kept) loose_ids.insert(e.article_id);
        for (const auto& e : tight.kept) CHECK(loose_ids.count(e.article_id) == 1);
    }
}

TEST_CASE("relevance filter drops roughly a quarter of a mixed stub corpus") {
    // Three in four articles restate the event; the rest are off-topic.
    const std::string summary = "united states raises tariffs on european union and japan imports";
    StubEmbedder stub;
    const Eigen::VectorXd event = stub_embed(summary);
    std::vector<Embedding> items;
    testgen::Gen g(8);
    const std::vector<std::string> filler{"steel", "autos", "brussels", "tokyo", "talks", "deadline", "levy"};
    const std::vector<std::string> offtopic{"rainfall", "football", "recipe", "concert", "garden", "museum", "galaxy"};
    for (int i = 0; i < 100; ++i) {
        std::string t;
        if (i % 4 == 3) {
            for (int k = 0; k < 8; ++k) t += offtopic[static_cast<std::size_t>(g.integer(0, 6))] + " ";
        } else {
            t = summary + " " + filler[static_cast<std::size_t>(g.integer(0, 6))];
        }
        items.push_back({"a" + std::to_string(i), stub_embed(t)});
    }
    const auto r = relevance_filter(event, items, 0.75);
    const double share = static_cast<double>(r.dropped) / 100.0;
    CHECK(share == doctest::Approx(0.25).epsilon(0.2));
}

TEST_CASE("article text joins title and body") {
    corpus::Article a;
    a.title = "Title";
    CHECK(article_text(a) == "Title");
    a.body = "Body";
    CHECK(article_text(a) == "Title\n\nBody");
}

TEST_CASE("embedding service client follows the wire contract") {
    std::ifstream in(testpaths::fixtures() / "contract" / "embed_wire.json");
    const json contract = json::parse(in);
    testserver::EmbedSidecar sidecar(32);
    ServiceEmbedder client(sidecar.url(), 32, {1, std::chrono::milliseconds(1)});
    CHECK(client.health() == "stub-fixture");

    for (const auto& c : contract.at("cases")) {
        CAPTURE(c.at("name").get<std::string>());
        const auto texts = c.at("texts").get<std::vector<std::string>>();
        const auto vectors = embed(texts, client);
        CHECK(vectors.size() == c.at("count").get<std::size_t>());
        for (const auto& v : vectors) CHECK(v.size() == 32);
        for (const auto& pair : c.value("same", json::array())) {
            const double cos = cosine_similarity(vectors[pair[0].get<std::size_t>()], vectors[pair[1].get<std::size_t>()]);
            CHECK(std::abs(cos - 1.0) <= c.at("tolerance").get<double>());
        }
    }
}

TEST_CASE("fixture sidecar responses carry exactly the contracted keys") {
    std::ifstream in(testpaths::fixtures() / "contract" / "embed_wire.json");
    const json contract = json::parse(in);
    testserver::EmbedSidecar sidecar(8);
    httplib::Client raw(sidecar.url());
    const auto health = raw.Get(contract["health"]["path"].get<std::string>());
    REQUIRE(health);
    const json h = json::parse(health->body);
    for (const auto& k : contract["health"]["keys"]) CHECK(h.contains(k.get<std::string>()));
    CHECK(h["status"] == contract["health"]["required"]["status"]);

    const auto res = raw.Post(contract["embed"]["path"].get<std::string>(), json{{"texts", {"x", "y", "z"}}}.dump(),
                              "application/json");
    REQUIRE(res);
    const json body = json::parse(res->body);
    CHECK(body.size() == contract["embed"]["response_keys"].size());
    for (const auto& k : contract["embed"]["response_keys"]) CHECK(body.contains(k.get<std::string>()));
    CHECK(body["vectors"].size() == 3);
    for (const auto& v : body["vectors"]) CHECK(v.size() == body["dim"].get<std::size_t>());
}

TEST_CASE("embedding service client batches and keeps order") {
    testserver::EmbedSidecar sidecar(16);
    ServiceEmbedder client(sidecar.url(), 16, {1, std::chrono::milliseconds(1)}, 64, 4);
    std::vector<std::string> texts;
    for (int i = 0; i < 150; ++i) texts.push_back("text number " + std::to_string(i));
    const auto vectors = embed(texts, client);
    REQUIRE(vectors.size() == 150);
    CHECK(sidecar.requests() == 3);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        CHECK(vectors[i].isApprox(stub_embed(texts[i], 16), 1e-12));
    }
}

TEST_CASE("embedding service client rejects a dimension mismatch") {
    testserver::EmbedSidecar sidecar(16, 768);
    ServiceEmbedder client(sidecar.url(), 768, {1, std::chrono::milliseconds(1)});
    CHECK_THROWS_AS(embed({"a"}, client), DataError);
    testserver::EmbedSidecar honest(16);
    ServiceEmbedder wrong(honest.url(), 768, {1, std::chrono::milliseconds(1)});
    CHECK_THROWS_WITH_AS(embed({"a"}, wrong), doctest::Contains("768"), DataError);
}

TEST_CASE("embedding service client reports an unreachable service") {
    // Bind and release a port so nothing is listening on it.
    std::string url;
    {
        testserver::FixtureServer s;
        s.start();
        url = s.url();
    }
    ServiceEmbedder client(url, 16, {2, std::chrono::milliseconds(1), std::chrono::seconds(1)});
    CHECK_THROWS_AS(embed({"a"}, client), UpstreamError);
    CHECK_THROWS_AS(client.health(), UpstreamError);
}
