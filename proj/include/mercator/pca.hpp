#pragma once

#include "mercator/corpus.hpp"
#include "mercator/ipf.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace mercator::pca {

/// Article weights halve every 25 days.
inline const double kRecencyDecay = std::log(2.0) / 25.0;
inline constexpr double kVarianceRetained = 0.95;
inline constexpr double kLoadingPercentile = 0.95;

struct LabeledEmbedding {
    std::string article_id;
    Eigen::VectorXd vector;
    corpus::Outcome outcome = corpus::Outcome::Yes;
};

/// Principal axes of a centred point cloud.
///
/// `components` is D x r with orthonormal columns ordered by decreasing
/// eigenvalue; r is the numerical rank of the centred data, so r <= N - 1
/// and r <= D. Column k holds the loading scores of every original
/// dimension on PC k+1. Each column's sign is fixed so that its largest
/// magnitude entry is positive.
struct PcaModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components;
    Eigen::VectorXd eigenvalues;

    Eigen::Index dim() const { return mean.size(); }
    Eigen::Index rank() const { return components.cols(); }
};

/// Unsupervised fit on the rows of `data` (N x D, N >= 2). Uses a thin SVD
/// of the centred data; eigenvalues are sigma^2 / (N - 1).
PcaModel fit_basis(const Eigen::MatrixXd& data);

/// Fit on labelled embeddings. Needs N >= 3 and both outcomes present.
PcaModel fit_pca(std::span<const LabeledEmbedding> labeled);

struct ExplainedVariance {
    Eigen::VectorXd ratios;
    Eigen::VectorXd cumulative;
    Eigen::Index n_retained = 0;  // smallest prefix whose cumulative ratio reaches `retain`
};

ExplainedVariance explained_variance(const PcaModel& model, double retain = kVarianceRetained);

/// Scores of `v` on every component: U^T (v - mean).
Eigen::VectorXd project(const PcaModel& model, const Eigen::VectorXd& v);
/// Row-wise projection of an N x D matrix, giving N x r.
Eigen::MatrixXd project_rows(const PcaModel& model, const Eigen::MatrixXd& data);
/// mean + sum_k scores_k u_k.
Eigen::VectorXd reconstruct(const PcaModel& model, const Eigen::VectorXd& scores);

struct FisherScores {
    Eigen::VectorXd scores;
    Eigen::Index k_star = 0;  // zero-based; lowest index wins ties
};

/// Per-component (mean_yes - mean_no)^2 / (var_yes + var_no) with sample
/// (N - 1) variances. A zero denominator with a nonzero numerator scores
/// +infinity; identical class means score 0. Each class needs >= 2 rows.
FisherScores fisher_scores(const Eigen::MatrixXd& projected, std::span<const corpus::Outcome> outcomes);

/// Linear interpolation between order statistics at position q * (n - 1).
double percentile(std::vector<double> values, double q);

struct TopFeatures {
    double tau = 0.0;
    std::vector<Eigen::Index> indices;  // ascending
};

/// Original dimensions whose |loading| on component k_star is at least the
/// 95th percentile of all |loadings| on that component.
TopFeatures select_top_features(const PcaModel& model, Eigen::Index k_star, double q = kLoadingPercentile);

struct ClassMeans {
    Eigen::VectorXd yes;
    Eigen::VectorXd no;
};

/// Per-class means of the original embeddings restricted to `features`.
ClassMeans class_means(std::span<const LabeledEmbedding> labeled, const std::vector<Eigen::Index>& features);

Eigen::VectorXd restrict_to(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& features);

struct FisherSelection {
    Eigen::VectorXd fisher_scores;
    Eigen::Index k_star = 0;
    double tau_pca = 0.0;
    std::vector<Eigen::Index> top_features;
    Eigen::VectorXd mu_yes_top;
    Eigen::VectorXd mu_no_top;
};

/// Projects the labelled set, scores every component and derives the
/// top-feature class means.
FisherSelection select_features(const PcaModel& model, std::span<const LabeledEmbedding> labeled);

/// d_no / (d_yes + d_no) over the top features; 0.5 when both distances are 0.
double article_p_yes(const Eigen::VectorXd& v_new, const FisherSelection& selection);

/// exp(-lambda * age). Negative ages are clamped to 0 with a warning.
double recency_weight(double age_days, double lambda = kRecencyDecay);

struct ArticleScore {
    std::string article_id;
    double p_yes = 0.5;
    double recency_weight = 1.0;
};

/// Recency-weighted mean of per-article probabilities. Throws NoSignal on
/// empty input.
ipf::Binary aggregate_pca(std::span<const ArticleScore> scores);

/// Fitted classifier: basis plus Fisher selection. Immutable after fit.
class PcaClassifier {
public:
    explicit PcaClassifier(std::span<const LabeledEmbedding> labeled);

    const PcaModel& model() const { return model_; }
    const FisherSelection& selection() const { return selection_; }

    ArticleScore score(const std::string& article_id, const Eigen::VectorXd& v, double age_days,
                       double lambda = kRecencyDecay) const;

private:
    PcaModel model_;
    FisherSelection selection_;
};

}  // namespace mercator::pca
