#pragma once

#include <json.hpp>

#include "merton/model.hpp"

namespace merton {

// Feedback pair (kappa, theta) meaning c = kappa * X and pi = theta * X.
// Wealth stays positive automatically for this class; kappa must be >= 0.
struct ProportionalStrategy {
    double kappa = 0.0;
    double theta = 0.0;

    ProportionalStrategy() = default;
    ProportionalStrategy(double kappa_, double theta_);
};

// x^(1-gamma) evaluated as exp((1-gamma) * log x) so non-integer gamma stays
// exact in floating point. Requires x > 0.
double power_1mg(double x, double gamma);

// Merton constant a = ((rho - (1-gamma)(r + lambda^2/(2 gamma))) / gamma)^(-gamma).
// Throws on an ill-posed spec.
double merton_constant(const ModelSpec& spec);

// Value function V(x) = a x^(1-gamma) / (1-gamma) and its derivatives.
// All three throw on x <= 0 or an ill-posed spec.
double value(const ModelSpec& spec, double x);
double value_d1(const ModelSpec& spec, double x);
double value_d2(const ModelSpec& spec, double x);

// Optimal feedback fractions (kappa_hat, theta_hat) = (a^(-1/gamma), lambda/(sigma gamma)).
ProportionalStrategy optimal_strategy(const ModelSpec& spec);

// Drift and volatility of log-optimal-wealth:
// log X_t = log x + ((r - rho)/gamma + lambda^2/(2 gamma)) t + (lambda/gamma) W_t.
struct WealthLaw {
    double drift = 0.0;
    double vol = 0.0;
};
WealthLaw optimal_wealth_law(const ModelSpec& spec);

// Exponential growth rate of E[X_t^(1-gamma)] under a proportional strategy:
// g(kappa, theta) = (1-gamma)(r + sigma lambda theta - kappa) - gamma (1-gamma) sigma^2 theta^2 / 2.
double growth_exponent(const ModelSpec& spec, const ProportionalStrategy& strat);

// Lifetime objective of a proportional strategy from the lognormal moment:
// J = x^(1-gamma) kappa^(1-gamma) / ((1-gamma)(rho - g)) when rho > g,
// otherwise -inf. kappa = 0 also gives -inf (zero consumption, gamma > 1).
double proportional_objective(const ModelSpec& spec,
                              const ProportionalStrategy& strat, double x);

// Exponent xi(alpha) = -rho + (1-gamma)(r - alpha) of e^{-rho t} V(X_t) along
// the deterministic path with c = alpha x, pi = 0. Positive iff
// alpha > rho/(gamma-1) + r, the divergence threshold.
double transversality_exponent(const ModelSpec& spec, double alpha);

// Everything the solve report needs in one bundle.
struct ClosedFormSolution {
    double a = 0.0;
    double kappa_hat = 0.0;
    double theta_hat = 0.0;
    double drift_opt = 0.0;
    double vol_opt = 0.0;
    double kappa0 = 0.0;
    double margin = 0.0;
};

ClosedFormSolution solve_closed_form(const ModelSpec& spec);
nlohmann::json to_json(const ClosedFormSolution& sol);

} // namespace merton
