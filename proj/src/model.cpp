#include "merton/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace merton {

namespace {

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) {
        throw std::invalid_argument(std::string(name) + " must be finite");
    }
}

} // namespace

void MarketParams::validate() const {
    require_finite(r, "r");
    require_finite(mu, "mu");
    require_finite(sigma, "sigma");
    if (sigma <= 0.0) {
        throw std::invalid_argument("sigma must be strictly positive");
    }
}

void Preferences::validate() const {
    require_finite(rho, "rho");
    require_finite(gamma, "gamma");
    if (gamma <= 1.0) {
        throw std::invalid_argument("gamma must be strictly greater than 1");
    }
}

double risk_premium(const MarketParams& market) {
    market.validate();
    return (market.mu - market.r) / market.sigma;
}

ModelSpec::ModelSpec(MarketParams market, Preferences prefs)
    : market_(market), prefs_(prefs), lambda_(risk_premium(market)) {
    prefs_.validate();
}

double ModelSpec::margin() const {
    const double g = prefs_.gamma;
    return prefs_.rho - (1.0 - g) * (market_.r + lambda_ * lambda_ / (2.0 * g));
}

double ModelSpec::kappa_max() const {
    if (!is_well_posed()) {
        throw std::invalid_argument("ill-posed spec: margin = " +
                                    std::to_string(margin()));
    }
    const double g = prefs_.gamma;
    return prefs_.rho / (g - 1.0) + market_.r + lambda_ * lambda_ / (2.0 * g);
}

nlohmann::json to_json(const ModelSpec& spec) {
    return nlohmann::json{{"r", spec.r()},
                          {"mu", spec.mu()},
                          {"sigma", spec.sigma()},
                          {"rho", spec.rho()},
                          {"gamma", spec.gamma()}};
}

ModelSpec spec_from_json(const nlohmann::json& j) {
    MarketParams market;
    Preferences prefs;
    market.r = j.at("r").get<double>();
    market.mu = j.at("mu").get<double>();
    market.sigma = j.at("sigma").get<double>();
    prefs.rho = j.at("rho").get<double>();
    prefs.gamma = j.at("gamma").get<double>();
    return ModelSpec(market, prefs);
}

} // namespace merton
