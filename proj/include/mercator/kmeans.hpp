#pragma once

#include "mercator/corpus.hpp"
#include "mercator/ipf.hpp"
#include "mercator/pca.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mercator::kmeans {

inline constexpr double kDistanceEpsilon = 1e-9;
inline constexpr int kDefaultMaxIter = 100;
inline constexpr double kDefaultTol = 1e-6;

/// Two-cluster Lloyd fit. Clusters are numbered 0 and 1 internally and
/// reported as 1 and 2.
struct KMeansModel {
    std::array<Eigen::VectorXd, 2> centroids;
    std::vector<int> assignments;  // 0 or 1 per input row
    int iterations = 0;
    bool converged = false;
    int reseeds = 0;
    std::vector<double> objective;  // sum of squared distances after each iteration
};

/// Index of the nearer centroid; ties go to cluster 0.
int nearest(const std::array<Eigen::VectorXd, 2>& centroids, const Eigen::VectorXd& v);

/// Initial centroids: a seeded-random first point, then the point farthest
/// from it (lowest index on ties). An emptied cluster is re-seeded at the
/// point farthest from its own centroid. Iteration stops when assignments
/// are stable and no centroid moved by `tol` or more.
KMeansModel fit_kmeans(const Eigen::MatrixXd& data, std::uint64_t seed, int max_iter = kDefaultMaxIter,
                       double tol = kDefaultTol);

/// Lloyd iterations from explicit starting centroids.
KMeansModel fit_kmeans_from(const Eigen::MatrixXd& data, std::array<Eigen::VectorXd, 2> initial,
                            int max_iter = kDefaultMaxIter, double tol = kDefaultTol);

struct Seed {
    std::size_t row = 0;
    corpus::Outcome outcome = corpus::Outcome::Yes;
};

struct OutcomeMap {
    int yes_cluster = 0;
    int evidence = 0;  // Yes-labelled seeds inside the chosen cluster
};

/// Cluster holding most Yes seeds. Ties fall back to the centroid nearer
/// mu_yes_top of the PCA selection, then to cluster 0 with a warning.
OutcomeMap map_clusters_to_outcomes(const KMeansModel& model, std::span<const Seed> seeds,
                                    const pca::FisherSelection* selection = nullptr);

struct ArticleWeight {
    double dist = 0.0;
    double time = 0.0;
};

ArticleWeight article_weight(double distance, double age_days, double epsilon = kDistanceEpsilon,
                             double lambda = pca::kRecencyDecay);

/// Normalises each component to sum 1 and averages them.
std::vector<double> combine_weights(std::span<const double> w_dist, std::span<const double> w_time);

/// Share of weight held by articles in the Yes cluster.
ipf::Binary aggregate_kmeans(const KMeansModel& model, const OutcomeMap& map, std::span<const double> weights);

/// Distance of each row to its own centroid.
std::vector<double> distances_to_centroid(const KMeansModel& model, const Eigen::MatrixXd& data);

}  // namespace mercator::kmeans
