#include "mercator/ipf.hpp"

#include "mercator/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <tuple>

namespace mercator::ipf {

namespace {

struct Named {
    const char* name;
    double value;
};

template <std::size_t N>
std::vector<std::string> check(const std::array<Named, N>& entries) {
    std::vector<std::string> out;
    double sum = 0.0;
    for (const auto& [name, value] : entries) {
        if (!std::isfinite(value)) {
            out.push_back(std::string("weight ") + name + " is not finite");
            continue;
        }
        if (value < 0.0) {
            std::ostringstream msg;
            msg << "weight " << name << " is negative (" << value << ")";
            out.push_back(msg.str());
        }
        sum += value;
    }
    if (out.empty() && std::abs(sum - 1.0) > kWeightTolerance) {
        std::ostringstream msg;
        msg.precision(12);
        msg << "weights (";
        for (std::size_t i = 0; i < N; ++i) {
            msg << (i ? ", " : "") << entries[i].name;
        }
        msg << ") sum to " << sum << ", expected 1";
        out.push_back(msg.str());
    }
    return out;
}

std::array<Named, 3> named(const SnaWeights& w) {
    return {{{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma}}};
}

std::array<Named, 4> named(const IpfWeights& w) {
    return {{{"w_lstm", w.lstm}, {"w_sna", w.sna}, {"w_crowd", w.crowd}, {"w_macro", w.macro}}};
}

void throw_if_any(const std::vector<std::string>& diagnostics) {
    if (diagnostics.empty()) {
        return;
    }
    std::string joined;
    for (const auto& d : diagnostics) {
        joined += (joined.empty() ? "" : "; ") + d;
    }
    throw ConfigError(joined);
}

void require_probability(const char* name, double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        std::ostringstream msg;
        msg << name << " probability " << p << " outside [0, 1]";
        throw DataError(msg.str());
    }
}

// Weighted mean over present entries; writes each entry's effective weight.
template <std::size_t N>
double renormalised_sum(const std::array<std::optional<double>, N>& probs, const std::array<double, N>& weights,
                        std::array<double, N>& effective) {
    double present_mass = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        if (probs[i]) {
            present_mass += weights[i];
        }
    }
    if (!(present_mass > 0.0)) {
        throw NoSignal("no present module carries positive weight");
    }
    double p = 0.0;
    double lo = 1.0;
    double hi = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        effective[i] = probs[i] ? weights[i] / present_mass : 0.0;
        if (probs[i] && effective[i] > 0.0) {
            p += effective[i] * *probs[i];
            lo = std::min(lo, *probs[i]);
            hi = std::max(hi, *probs[i]);
        }
    }
    // Rounding must not push a convex combination outside its inputs.
    return std::clamp(p, lo, hi);
}

}  // namespace

std::vector<std::string> validate_weights(const SnaWeights& w) { return check(named(w)); }
std::vector<std::string> validate_weights(const IpfWeights& w) { return check(named(w)); }
void require_valid(const SnaWeights& w) { throw_if_any(validate_weights(w)); }
void require_valid(const IpfWeights& w) { throw_if_any(validate_weights(w)); }

Binary make_binary(double p_yes) {
    const double yes = std::clamp(p_yes, 0.0, 1.0);
    return {yes, 1.0 - yes};
}

SnaResult combine_sna(std::optional<double> p_pca, std::optional<double> p_kmeans, std::optional<double> p_zs,
                      const SnaWeights& weights) {
    require_valid(weights);
    if (!p_pca && !p_kmeans && !p_zs) {
        throw NoSignal("all news submodules abstained");
    }
    if (p_pca) require_probability("pca", *p_pca);
    if (p_kmeans) require_probability("kmeans", *p_kmeans);
    if (p_zs) require_probability("zeroshot", *p_zs);

    std::array<double, 3> effective{};
    const double p = renormalised_sum<3>({p_pca, p_kmeans, p_zs}, {weights.alpha, weights.beta, weights.gamma},
                                         effective);
    return {make_binary(p), {effective[0], effective[1], effective[2]}};
}

EventForecast combine_ipf(const std::string& event_id, const ModuleProbabilities& modules, const IpfWeights& weights) {
    require_valid(weights);
    if (!modules.lstm && !modules.sna && !modules.crowd && !modules.macro) {
        throw NoSignal("no prediction module produced a probability for " + event_id);
    }
    if (modules.lstm) require_probability("lstm", *modules.lstm);
    if (modules.sna) require_probability("sna", *modules.sna);
    if (modules.crowd) require_probability("crowd", *modules.crowd);
    if (modules.macro) require_probability("macro", *modules.macro);

    std::array<double, 4> effective{};
    const double p = renormalised_sum<4>({modules.lstm, modules.sna, modules.crowd, modules.macro},
                                         {weights.lstm, weights.sna, weights.crowd, weights.macro}, effective);
    EventForecast out;
    out.event_id = event_id;
    out.modules = modules;
    out.weights = weights;
    out.effective = {effective[0], effective[1], effective[2], effective[3]};
    const Binary b = make_binary(p);
    out.p_yes = b.yes;
    out.p_no = b.no;

    const std::array<std::tuple<const char*, bool, double>, 4> present{
        {{"lstm", modules.lstm.has_value(), weights.lstm},
         {"sna", modules.sna.has_value(), weights.sna},
         {"crowd", modules.crowd.has_value(), weights.crowd},
         {"macro", modules.macro.has_value(), weights.macro}}};
    for (const auto& [name, has, weight] : present) {
        if (!has && weight > 0.0) {
            out.notes.push_back(std::string(name) + " abstained; weight redistributed");
        }
    }
    return out;
}

}  // namespace mercator::ipf
