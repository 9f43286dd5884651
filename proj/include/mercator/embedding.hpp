#pragma once

#include "mercator/corpus.hpp"
#include "mercator/http.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mercator::embedding {

inline constexpr int kDefaultDim = 768;
inline constexpr std::uint64_t kStubSeed = 0x6d65726361746f72ULL;
inline constexpr std::size_t kServiceBatch = 64;

struct Embedding {
    std::string article_id;
    Eigen::VectorXd vector;
};

class EmbedBackend {
public:
    virtual ~EmbedBackend() = default;
    virtual int dim() const = 0;
    virtual std::vector<Eigen::VectorXd> embed_texts(const std::vector<std::string>& texts) = 0;
};

/// Hashed bag of tokens: every token owns a pseudo-random direction in
/// [-1, 1]^dim derived from its FNV-1a hash and the seed; a text is the
/// unit-normalised sum of its tokens' directions. Texts with no tokens map
/// to the basis vector e_(seed mod dim).
Eigen::VectorXd stub_embed(std::string_view text, int dim = kDefaultDim, std::uint64_t seed = kStubSeed);

class StubEmbedder final : public EmbedBackend {
public:
    explicit StubEmbedder(int dim = kDefaultDim, std::uint64_t seed = kStubSeed);
    int dim() const override { return dim_; }
    std::vector<Eigen::VectorXd> embed_texts(const std::vector<std::string>& texts) override;

private:
    int dim_;
    std::uint64_t seed_;
};

/// Client for the embedding sidecar: POST /embed {"texts": [...]} answered
/// by {"dim": D, "vectors": [[...]]}. Requests are batched and up to
/// `parallelism` batches are in flight at once.
class ServiceEmbedder final : public EmbedBackend {
public:
    ServiceEmbedder(std::string base_url, int expected_dim, http::RetryPolicy retry = {},
                    std::size_t batch = kServiceBatch, std::size_t parallelism = 4);
    int dim() const override { return dim_; }
    std::vector<Eigen::VectorXd> embed_texts(const std::vector<std::string>& texts) override;

    /// GET /health; returns the reported model name.
    std::string health() const;

private:
    std::vector<Eigen::VectorXd> embed_batch(const std::vector<std::string>& texts) const;

    http::Client client_;
    int dim_;
    std::size_t batch_;
    std::size_t parallelism_;
};

/// One vector per text, in order. Throws DataError on a dimension mismatch
/// or non-finite entries.
std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& texts, EmbedBackend& backend);

/// Title and body joined by a blank line; title alone when the body is empty.
std::string article_text(const corpus::Article& article);

std::vector<Embedding> embed_articles(const std::vector<corpus::Article>& articles, EmbedBackend& backend);

/// Cosine of the angle between a and b, clamped to [-1, 1]. Throws
/// DataError for zero-norm input or mismatched lengths.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct RelevanceResult {
    std::vector<Embedding> kept;
    std::vector<double> similarities;  // one per input, input order
    std::size_t dropped = 0;
};

/// Keeps exactly the embeddings whose similarity to `event_vec` is >= tau.
RelevanceResult relevance_filter(const Eigen::VectorXd& event_vec, const std::vector<Embedding>& embeddings,
                                 double tau = corpus::kDefaultRelevanceTau);

}  // namespace mercator::embedding
