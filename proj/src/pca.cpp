#include "mercator/pca.hpp"

#include "mercator/error.hpp"

#include <algorithm>
#include <iostream>
#include <limits>

namespace mercator::pca {

using corpus::Outcome;

PcaModel fit_basis(const Eigen::MatrixXd& data) {
    const Eigen::Index n = data.rows();
    const Eigen::Index d = data.cols();
    if (n < 2 || d < 1) {
        throw DataError("PCA needs at least 2 points, got " + std::to_string(n));
    }
    if (!data.allFinite()) {
        throw DataError("PCA input contains non-finite entries");
    }

    PcaModel model;
    model.mean = data.colwise().mean().transpose();
    const Eigen::MatrixXd centred = data.rowwise() - model.mean.transpose();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) {
        throw DataError("PCA input has zero variance");
    }
    const double tol = sv[0] * static_cast<double>(std::max(n, d)) * std::numeric_limits<double>::epsilon();
    Eigen::Index r = 0;
    while (r < sv.size() && sv[r] > tol) {
        ++r;
    }
    r = std::min({r, n - 1, d});

    model.components = svd.matrixV().leftCols(r);
    model.eigenvalues = sv.head(r).array().square() / static_cast<double>(n - 1);
    for (Eigen::Index k = 0; k < r; ++k) {
        Eigen::Index arg = 0;
        model.components.col(k).cwiseAbs().maxCoeff(&arg);
        if (model.components(arg, k) < 0.0) {
            model.components.col(k) *= -1.0;
        }
    }
    return model;
}

namespace {

Eigen::MatrixXd stack(std::span<const LabeledEmbedding> labeled) {
    const Eigen::Index d = labeled.front().vector.size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(labeled.size()), d);
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        if (labeled[i].vector.size() != d) {
            throw DataError("labelled embeddings have differing dimensions");
        }
        m.row(static_cast<Eigen::Index>(i)) = labeled[i].vector.transpose();
    }
    return m;
}

std::vector<Outcome> outcomes_of(std::span<const LabeledEmbedding> labeled) {
    std::vector<Outcome> out;
    out.reserve(labeled.size());
    for (const auto& l : labeled) {
        out.push_back(l.outcome);
    }
    return out;
}

void require_both_classes(std::span<const LabeledEmbedding> labeled) {
    const auto yes = std::count_if(labeled.begin(), labeled.end(),
                                   [](const LabeledEmbedding& l) { return l.outcome == Outcome::Yes; });
    if (yes == 0 || yes == static_cast<std::ptrdiff_t>(labeled.size())) {
        throw DataError("labelled set must contain both YES and NO articles");
    }
}

}  // namespace

PcaModel fit_pca(std::span<const LabeledEmbedding> labeled) {
    if (labeled.size() < 3) {
        throw DataError("PCA needs at least 3 labelled articles, got " + std::to_string(labeled.size()));
    }
    require_both_classes(labeled);
    return fit_basis(stack(labeled));
}

ExplainedVariance explained_variance(const PcaModel& model, double retain) {
    ExplainedVariance out;
    const double total = model.eigenvalues.sum();
    out.ratios = model.eigenvalues / total;
    out.cumulative.resize(out.ratios.size());
    double running = 0.0;
    out.n_retained = out.ratios.size();
    for (Eigen::Index k = 0; k < out.ratios.size(); ++k) {
        running += out.ratios[k];
        out.cumulative[k] = running;
    }
    for (Eigen::Index k = 0; k < out.ratios.size(); ++k) {
        if (out.cumulative[k] >= retain - 1e-12) {
            out.n_retained = k + 1;
            break;
        }
    }
    return out;
}

Eigen::VectorXd project(const PcaModel& model, const Eigen::VectorXd& v) {
    if (v.size() != model.dim()) {
        throw DataError("project: vector of length " + std::to_string(v.size()) + ", model dimension " +
                        std::to_string(model.dim()));
    }
    return model.components.transpose() * (v - model.mean);
}

Eigen::MatrixXd project_rows(const PcaModel& model, const Eigen::MatrixXd& data) {
    if (data.cols() != model.dim()) {
        throw DataError("project_rows: dimension mismatch");
    }
    return (data.rowwise() - model.mean.transpose()) * model.components;
}

Eigen::VectorXd reconstruct(const PcaModel& model, const Eigen::VectorXd& scores) {
    if (scores.size() != model.rank()) {
        throw DataError("reconstruct: score vector length does not match rank");
    }
    return model.mean + model.components * scores;
}

FisherScores fisher_scores(const Eigen::MatrixXd& projected, std::span<const Outcome> outcomes) {
    if (static_cast<std::size_t>(projected.rows()) != outcomes.size()) {
        throw DataError("fisher_scores: one outcome per projected row required");
    }
    std::vector<Eigen::Index> yes_rows;
    std::vector<Eigen::Index> no_rows;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        (outcomes[i] == Outcome::Yes ? yes_rows : no_rows).push_back(static_cast<Eigen::Index>(i));
    }
    if (yes_rows.size() < 2 || no_rows.size() < 2) {
        throw DataError("fisher_scores needs at least 2 articles per class");
    }
    const Eigen::MatrixXd yes = projected(yes_rows, Eigen::all);
    const Eigen::MatrixXd no = projected(no_rows, Eigen::all);
    const Eigen::RowVectorXd mu_yes = yes.colwise().mean();
    const Eigen::RowVectorXd mu_no = no.colwise().mean();
    const Eigen::RowVectorXd var_yes =
        (yes.rowwise() - mu_yes).colwise().squaredNorm() / static_cast<double>(yes.rows() - 1);
    const Eigen::RowVectorXd var_no =
        (no.rowwise() - mu_no).colwise().squaredNorm() / static_cast<double>(no.rows() - 1);

    FisherScores out;
    out.scores.resize(projected.cols());
    for (Eigen::Index k = 0; k < projected.cols(); ++k) {
        const double gap = mu_yes[k] - mu_no[k];
        const double num = gap * gap;
        const double den = var_yes[k] + var_no[k];
        if (num == 0.0) {
            out.scores[k] = 0.0;
        } else if (den == 0.0) {
            out.scores[k] = std::numeric_limits<double>::infinity();
        } else {
            out.scores[k] = num / den;
        }
    }
    for (Eigen::Index k = 1; k < out.scores.size(); ++k) {
        if (out.scores[k] > out.scores[out.k_star]) {
            out.k_star = k;
        }
    }
    return out;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw DataError("percentile of an empty set");
    }
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double value = values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
    return std::min(value, values[hi]);
}

TopFeatures select_top_features(const PcaModel& model, Eigen::Index k_star, double q) {
    if (k_star < 0 || k_star >= model.rank()) {
        throw DataError("select_top_features: component index out of range");
    }
    const Eigen::VectorXd loadings = model.components.col(k_star).cwiseAbs();
    TopFeatures out;
    out.tau = percentile(std::vector<double>(loadings.begin(), loadings.end()), q);
    for (Eigen::Index i = 0; i < loadings.size(); ++i) {
        if (loadings[i] >= out.tau) {
            out.indices.push_back(i);
        }
    }
    return out;
}

Eigen::VectorXd restrict_to(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& features) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(features.size()));
    for (std::size_t i = 0; i < features.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = v[features[i]];
    }
    return out;
}

ClassMeans class_means(std::span<const LabeledEmbedding> labeled, const std::vector<Eigen::Index>& features) {
    const auto f = static_cast<Eigen::Index>(features.size());
    ClassMeans out{Eigen::VectorXd::Zero(f), Eigen::VectorXd::Zero(f)};
    std::size_t n_yes = 0;
    std::size_t n_no = 0;
    for (const auto& l : labeled) {
        const Eigen::VectorXd r = restrict_to(l.vector, features);
        if (l.outcome == Outcome::Yes) {
            out.yes += r;
            ++n_yes;
        } else {
            out.no += r;
            ++n_no;
        }
    }
    if (n_yes == 0 || n_no == 0) {
        throw DataError("class_means: both classes must be present");
    }
    out.yes /= static_cast<double>(n_yes);
    out.no /= static_cast<double>(n_no);
    return out;
}

FisherSelection select_features(const PcaModel& model, std::span<const LabeledEmbedding> labeled) {
    const std::vector<Outcome> outcomes = outcomes_of(labeled);
    const FisherScores fs = fisher_scores(project_rows(model, stack(labeled)), outcomes);
    TopFeatures top = select_top_features(model, fs.k_star);
    ClassMeans means = class_means(labeled, top.indices);
    return {fs.scores, fs.k_star, top.tau, std::move(top.indices), std::move(means.yes), std::move(means.no)};
}

double article_p_yes(const Eigen::VectorXd& v_new, const FisherSelection& selection) {
    const Eigen::VectorXd top = restrict_to(v_new, selection.top_features);
    const double d_yes = (top - selection.mu_yes_top).norm();
    const double d_no = (top - selection.mu_no_top).norm();
    if (d_yes + d_no == 0.0) {
        return 0.5;
    }
    return d_no / (d_yes + d_no);
}

double recency_weight(double age_days, double lambda) {
    if (age_days < 0.0) {
        std::clog << "warning: negative article age " << age_days << " days clamped to 0\n";
        age_days = 0.0;
    }
    return std::exp(-lambda * age_days);
}

ipf::Binary aggregate_pca(std::span<const ArticleScore> scores) {
    if (scores.empty()) {
        throw NoSignal("no unlabelled articles to score");
    }
    double num = 0.0;
    double den = 0.0;
    for (const auto& s : scores) {
        num += s.recency_weight * s.p_yes;
        den += s.recency_weight;
    }
    if (!(den > 0.0)) {
        throw NoSignal("all article weights are zero");
    }
    return ipf::make_binary(num / den);
}

PcaClassifier::PcaClassifier(std::span<const LabeledEmbedding> labeled)
    : model_(fit_pca(labeled)), selection_(select_features(model_, labeled)) {}

ArticleScore PcaClassifier::score(const std::string& article_id, const Eigen::VectorXd& v, double age_days,
                                  double lambda) const {
    if (v.size() != model_.dim()) {
        throw DataError("score: embedding dimension does not match the fitted model");
    }
    return {article_id, article_p_yes(v, selection_), recency_weight(age_days, lambda)};
}

}  // namespace mercator::pca
