#pragma once

#include <json.hpp>

namespace merton {

// Black-Scholes market: riskless rate r, risky drift mu, risky volatility sigma.
struct MarketParams {
    double r = 0.0;
    double mu = 0.0;
    double sigma = 1.0;

    void validate() const;
};

// CRRA preferences in the high risk aversion regime gamma > 1.
// rho is the subjective discount rate and may be negative.
struct Preferences {
    double rho = 0.0;
    double gamma = 2.0;

    void validate() const;
};

// Risk premium lambda = (mu - r) / sigma. Throws on sigma <= 0.
double risk_premium(const MarketParams& market);

// Market plus preferences with the derived risk premium. Single source of
// truth for every formula downstream; construction validates all invariants.
class ModelSpec {
public:
    ModelSpec(MarketParams market, Preferences prefs);

    double r() const { return market_.r; }
    double mu() const { return market_.mu; }
    double sigma() const { return market_.sigma; }
    double rho() const { return prefs_.rho; }
    double gamma() const { return prefs_.gamma; }
    double lambda() const { return lambda_; }

    const MarketParams& market() const { return market_; }
    const Preferences& prefs() const { return prefs_; }

    // Finiteness margin rho - (1 - gamma) * (r + lambda^2 / (2 gamma)).
    // The value function is finite and nontrivial iff this is positive.
    double margin() const;
    bool is_well_posed() const { return margin() > 0.0; }

    // Supremum kappa_0 = rho/(gamma-1) + r + lambda^2/(2 gamma) of consumption
    // fractions kappa with a finite objective at the optimal risky fraction.
    // Equals margin/(gamma-1); throws on an ill-posed spec.
    double kappa_max() const;

private:
    MarketParams market_;
    Preferences prefs_;
    double lambda_;
};

// Flat JSON with keys r, mu, sigma, rho, gamma. lambda is always recomputed
// on load and never trusted from the input.
nlohmann::json to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

} // namespace merton
