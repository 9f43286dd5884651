#include "mercator/kmeans.hpp"

#include "mercator/error.hpp"

#include <iostream>
#include <random>

namespace mercator::kmeans {

int nearest(const std::array<Eigen::VectorXd, 2>& centroids, const Eigen::VectorXd& v) {
    return (v - centroids[0]).squaredNorm() <= (v - centroids[1]).squaredNorm() ? 0 : 1;
}

namespace {

std::vector<int> assign_all(const std::array<Eigen::VectorXd, 2>& centroids, const Eigen::MatrixXd& data) {
    std::vector<int> out(static_cast<std::size_t>(data.rows()));
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        out[static_cast<std::size_t>(i)] = nearest(centroids, data.row(i).transpose());
    }
    return out;
}

double objective(const std::array<Eigen::VectorXd, 2>& centroids, const std::vector<int>& assign,
                 const Eigen::MatrixXd& data) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        total += (data.row(i).transpose() - centroids[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])])
                     .squaredNorm();
    }
    return total;
}

Eigen::Index farthest_from(const Eigen::MatrixXd& data, const Eigen::VectorXd& point) {
    Eigen::Index best = 0;
    double best_d = -1.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const double d = (data.row(i).transpose() - point).squaredNorm();
        if (d > best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

}  // namespace

KMeansModel fit_kmeans(const Eigen::MatrixXd& data, std::uint64_t seed, int max_iter, double tol) {
    if (data.rows() < 2) {
        throw DataError("k-means needs at least 2 points, got " + std::to_string(data.rows()));
    }
    if (!data.allFinite()) {
        throw DataError("k-means input contains non-finite entries");
    }
    std::mt19937_64 rng(seed);
    const auto first = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(data.rows()));
    Eigen::VectorXd c0 = data.row(first).transpose();
    Eigen::VectorXd c1 = data.row(farthest_from(data, c0)).transpose();
    return fit_kmeans_from(data, {std::move(c0), std::move(c1)}, max_iter, tol);
}

KMeansModel fit_kmeans_from(const Eigen::MatrixXd& data, std::array<Eigen::VectorXd, 2> initial, int max_iter,
                            double tol) {
    if (data.rows() < 2) {
        throw DataError("k-means needs at least 2 points, got " + std::to_string(data.rows()));
    }
    if (initial[0].size() != data.cols() || initial[1].size() != data.cols()) {
        throw DataError("k-means initial centroids do not match the data dimension");
    }
    KMeansModel model;
    model.centroids = std::move(initial);

    std::vector<int> assign = assign_all(model.centroids, data);
    for (int it = 1; it <= max_iter; ++it) {
        std::array<Eigen::VectorXd, 2> next{Eigen::VectorXd::Zero(data.cols()), Eigen::VectorXd::Zero(data.cols())};
        std::array<int, 2> counts{0, 0};
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            const auto c = static_cast<std::size_t>(assign[static_cast<std::size_t>(i)]);
            next[c] += data.row(i).transpose();
            ++counts[c];
        }
        for (std::size_t c = 0; c < 2; ++c) {
            if (counts[c] > 0) {
                next[c] /= static_cast<double>(counts[c]);
                continue;
            }
            // Empty cluster: move it onto the point worst served by the other one.
            const std::size_t other = 1 - c;
            Eigen::VectorXd other_centroid = next[other] / static_cast<double>(counts[other]);
            next[c] = data.row(farthest_from(data, other_centroid)).transpose();
            ++model.reseeds;
        }
        const double shift =
            std::max((next[0] - model.centroids[0]).norm(), (next[1] - model.centroids[1]).norm());
        model.centroids = std::move(next);
        std::vector<int> reassigned = assign_all(model.centroids, data);
        model.iterations = it;
        model.objective.push_back(objective(model.centroids, reassigned, data));
        const bool stable = reassigned == assign;
        assign = std::move(reassigned);
        if (stable && shift < tol) {
            model.converged = true;
            break;
        }
    }
    model.assignments = std::move(assign);
    return model;
}

OutcomeMap map_clusters_to_outcomes(const KMeansModel& model, std::span<const Seed> seeds,
                                    const pca::FisherSelection* selection) {
    if (seeds.empty() && selection == nullptr) {
        throw DataError("cannot map clusters to outcomes without labelled seeds or a PCA selection");
    }
    std::array<int, 2> yes{0, 0};
    for (const auto& s : seeds) {
        if (s.row >= model.assignments.size()) {
            throw DataError("seed row outside the clustered set");
        }
        if (s.outcome == corpus::Outcome::Yes) {
            ++yes[static_cast<std::size_t>(model.assignments[s.row])];
        }
    }
    if (yes[0] != yes[1]) {
        const int c = yes[0] > yes[1] ? 0 : 1;
        return {c, yes[static_cast<std::size_t>(c)]};
    }
    if (selection != nullptr) {
        const double d0 = (pca::restrict_to(model.centroids[0], selection->top_features) - selection->mu_yes_top).norm();
        const double d1 = (pca::restrict_to(model.centroids[1], selection->top_features) - selection->mu_yes_top).norm();
        if (d0 != d1) {
            const int c = d0 < d1 ? 0 : 1;
            return {c, yes[static_cast<std::size_t>(c)]};
        }
    }
    std::clog << "warning: cluster-to-outcome mapping is tied; cluster 1 taken as YES\n";
    return {0, yes[0]};
}

ArticleWeight article_weight(double distance, double age_days, double epsilon, double lambda) {
    if (distance < 0.0) {
        throw DataError("article_weight: negative distance");
    }
    return {1.0 / (distance + epsilon), pca::recency_weight(age_days, lambda)};
}

std::vector<double> combine_weights(std::span<const double> w_dist, std::span<const double> w_time) {
    if (w_dist.size() != w_time.size()) {
        throw DataError("combine_weights: length mismatch");
    }
    double sum_dist = 0.0;
    double sum_time = 0.0;
    for (std::size_t i = 0; i < w_dist.size(); ++i) {
        if (!(w_dist[i] >= 0.0) || !(w_time[i] >= 0.0) || !std::isfinite(w_dist[i]) || !std::isfinite(w_time[i])) {
            throw DataError("combine_weights: weights must be finite and non-negative");
        }
        sum_dist += w_dist[i];
        sum_time += w_time[i];
    }
    if (!(sum_dist > 0.0) || !(sum_time > 0.0)) {
        throw DataError("combine_weights: a weight component is all zero");
    }
    std::vector<double> out(w_dist.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = 0.5 * (w_dist[i] / sum_dist) + 0.5 * (w_time[i] / sum_time);
    }
    return out;
}

ipf::Binary aggregate_kmeans(const KMeansModel& model, const OutcomeMap& map, std::span<const double> weights) {
    if (weights.size() != model.assignments.size()) {
        throw DataError("aggregate_kmeans: one weight per clustered article required");
    }
    double yes = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        total += weights[i];
        if (model.assignments[i] == map.yes_cluster) {
            yes += weights[i];
        }
    }
    if (!(total > 0.0)) {
        throw NoSignal("k-means weights sum to zero");
    }
    return ipf::make_binary(yes / total);
}

std::vector<double> distances_to_centroid(const KMeansModel& model, const Eigen::MatrixXd& data) {
    std::vector<double> out(static_cast<std::size_t>(data.rows()));
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const auto c = static_cast<std::size_t>(model.assignments[static_cast<std::size_t>(i)]);
        out[static_cast<std::size_t>(i)] = (data.row(i).transpose() - model.centroids[c]).norm();
    }
    return out;
}

}  // namespace mercator::kmeans
