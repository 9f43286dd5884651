#pragma once

#include <optional>
#include <string>
#include <vector>

namespace mercator::ipf {

inline constexpr double kWeightTolerance = 1e-9;

/// Confidence weights of the three news submodules (PCA, k-means, zero-shot).
struct SnaWeights {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

/// Per-event ensemble weights of the four prediction modules.
struct IpfWeights {
    double lstm = 0.0;
    double sna = 0.0;
    double crowd = 0.0;
    double macro = 0.0;
};

/// Empty when the weights are non-negative and sum to one within
/// kWeightTolerance; otherwise one message per problem, each naming the
/// offending weight.
std::vector<std::string> validate_weights(const SnaWeights& w);
std::vector<std::string> validate_weights(const IpfWeights& w);

/// Throws ConfigError carrying the joined diagnostics.
void require_valid(const SnaWeights& w);
void require_valid(const IpfWeights& w);

/// A probability with its complement. `no` is always computed as 1 - yes.
struct Binary {
    double yes = 0.0;
    double no = 1.0;
};

Binary make_binary(double p_yes);

struct SnaResult {
    Binary p;
    SnaWeights effective;
};

/// Convex combination of the present submodule probabilities. Absent
/// submodules have their weight redistributed proportionally over the
/// present ones. Throws NoSignal when nothing with positive weight is present.
SnaResult combine_sna(std::optional<double> p_pca, std::optional<double> p_kmeans, std::optional<double> p_zs,
                      const SnaWeights& weights);

struct ModuleProbabilities {
    std::optional<double> lstm;
    std::optional<double> sna;
    std::optional<double> crowd;
    std::optional<double> macro;
};

struct EventForecast {
    std::string event_id;
    ModuleProbabilities modules;
    IpfWeights weights;
    IpfWeights effective;
    double p_yes = 0.0;
    double p_no = 1.0;
    std::vector<std::string> notes;
};

/// Weighted sum over the present modules with proportional renormalisation
/// of absent modules' weight.
EventForecast combine_ipf(const std::string& event_id, const ModuleProbabilities& modules, const IpfWeights& weights);

}  // namespace mercator::ipf
