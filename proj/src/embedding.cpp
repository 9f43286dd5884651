#include "mercator/embedding.hpp"

#include "mercator/error.hpp"
#include "mercator/hash.hpp"
#include "mercator/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>

namespace mercator::embedding {

using json = nlohmann::json;

Eigen::VectorXd stub_embed(std::string_view text, int dim, std::uint64_t seed) {
    if (dim < 1) {
        throw ConfigError("embedding dimension must be positive");
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    for (const auto& token : text::tokenize(text)) {
        std::mt19937_64 rng(fnv1a64(token) ^ seed);
        for (int d = 0; d < dim; ++d) {
            // 53 random mantissa bits mapped onto [-1, 1).
            v[d] += static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
        }
    }
    const double norm = v.norm();
    if (norm == 0.0) {
        v.setZero();
        v[static_cast<Eigen::Index>(seed % static_cast<std::uint64_t>(dim))] = 1.0;
        return v;
    }
    return v / norm;
}

StubEmbedder::StubEmbedder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ < 1) {
        throw ConfigError("embedding dimension must be positive");
    }
}

std::vector<Eigen::VectorXd> StubEmbedder::embed_texts(const std::vector<std::string>& texts) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        out.push_back(stub_embed(t, dim_, seed_));
    }
    return out;
}

ServiceEmbedder::ServiceEmbedder(std::string base_url, int expected_dim, http::RetryPolicy retry, std::size_t batch,
                                 std::size_t parallelism)
    : client_(std::move(base_url), retry),
      dim_(expected_dim),
      batch_(std::max<std::size_t>(batch, 1)),
      parallelism_(std::max<std::size_t>(parallelism, 1)) {}

std::string ServiceEmbedder::health() const {
    const auto res = client_.get("/health");
    if (res.status != 200) {
        throw UpstreamError("embedding service health check: HTTP " + std::to_string(res.status));
    }
    try {
        const json doc = json::parse(res.body);
        if (doc.at("status").get<std::string>() != "ok") {
            throw UpstreamError("embedding service reports status " + doc.at("status").dump());
        }
        return doc.value("model", "");
    } catch (const json::exception& e) {
        throw UpstreamError(std::string("embedding service health: malformed response: ") + e.what());
    }
}

std::vector<Eigen::VectorXd> ServiceEmbedder::embed_batch(const std::vector<std::string>& texts) const {
    const auto res = client_.post_json("/embed", json{{"texts", texts}}.dump());
    if (res.status != 200) {
        throw UpstreamError("embedding service: HTTP " + std::to_string(res.status));
    }
    json doc;
    try {
        doc = json::parse(res.body);
    } catch (const json::exception& e) {
        throw UpstreamError(std::string("embedding service: malformed response: ") + e.what());
    }
    const int reported = doc.value("dim", -1);
    if (reported != dim_) {
        throw DataError("embedding service dimension " + std::to_string(reported) + " does not match configured " +
                        std::to_string(dim_));
    }
    const json& vectors = doc.at("vectors");
    if (vectors.size() != texts.size()) {
        throw UpstreamError("embedding service returned " + std::to_string(vectors.size()) + " vectors for " +
                            std::to_string(texts.size()) + " texts");
    }
    std::vector<Eigen::VectorXd> out;
    out.reserve(vectors.size());
    for (const auto& row : vectors) {
        if (row.size() != static_cast<std::size_t>(dim_)) {
            throw DataError("embedding service returned a vector of length " + std::to_string(row.size()) +
                            ", expected " + std::to_string(dim_));
        }
        Eigen::VectorXd v(dim_);
        for (int i = 0; i < dim_; ++i) {
            v[i] = row[static_cast<std::size_t>(i)].get<double>();
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<Eigen::VectorXd> ServiceEmbedder::embed_texts(const std::vector<std::string>& texts) {
    std::vector<std::vector<std::string>> batches;
    for (std::size_t i = 0; i < texts.size(); i += batch_) {
        batches.emplace_back(texts.begin() + static_cast<std::ptrdiff_t>(i),
                             texts.begin() + static_cast<std::ptrdiff_t>(std::min(i + batch_, texts.size())));
    }
    std::vector<Eigen::VectorXd> out;
    out.reserve(texts.size());
    for (std::size_t wave = 0; wave < batches.size(); wave += parallelism_) {
        std::vector<std::future<std::vector<Eigen::VectorXd>>> pending;
        for (std::size_t b = wave; b < std::min(wave + parallelism_, batches.size()); ++b) {
            pending.push_back(std::async(std::launch::async, [this, &batches, b] { return embed_batch(batches[b]); }));
        }
        for (auto& f : pending) {
            auto part = f.get();
            out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
        }
    }
    return out;
}

std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& texts, EmbedBackend& backend) {
    auto out = backend.embed_texts(texts);
    if (out.size() != texts.size()) {
        throw DataError("embedding backend returned " + std::to_string(out.size()) + " vectors for " +
                        std::to_string(texts.size()) + " texts");
    }
    for (const auto& v : out) {
        if (v.size() != backend.dim()) {
            throw DataError("embedding of length " + std::to_string(v.size()) + ", expected " +
                            std::to_string(backend.dim()));
        }
        if (!v.allFinite()) {
            throw DataError("embedding with non-finite entries");
        }
    }
    return out;
}

std::string article_text(const corpus::Article& article) {
    return article.body.empty() ? article.title : article.title + "\n\n" + article.body;
}

std::vector<Embedding> embed_articles(const std::vector<corpus::Article>& articles, EmbedBackend& backend) {
    std::vector<std::string> texts;
    texts.reserve(articles.size());
    for (const auto& a : articles) {
        texts.push_back(article_text(a));
    }
    auto vectors = embed(texts, backend);
    std::vector<Embedding> out;
    out.reserve(articles.size());
    for (std::size_t i = 0; i < articles.size(); ++i) {
        out.push_back({articles[i].id, std::move(vectors[i])});
    }
    return out;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) {
        throw DataError("cosine_similarity: length mismatch (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
    }
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
        throw DataError("cosine_similarity: zero-norm vector");
    }
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

RelevanceResult relevance_filter(const Eigen::VectorXd& event_vec, const std::vector<Embedding>& embeddings,
                                 double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) {
        throw ConfigError("relevance threshold must lie in (0, 1]");
    }
    RelevanceResult out;
    out.similarities.reserve(embeddings.size());
    for (const auto& e : embeddings) {
        const double s = cosine_similarity(event_vec, e.vector);
        out.similarities.push_back(s);
        if (s >= tau) {
            out.kept.push_back(e);
        } else {
            ++out.dropped;
        }
    }
    return out;
}

}  // namespace mercator::embedding
