#include "merton/closed_form.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace merton {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ProportionalStrategy::ProportionalStrategy(double kappa_, double theta_)
    : kappa(kappa_), theta(theta_) {
    if (!(std::isfinite(kappa) && std::isfinite(theta))) {
        throw std::invalid_argument("strategy fractions must be finite");
    }
    if (kappa < 0.0) {
        throw std::invalid_argument("consumption fraction kappa must be >= 0");
    }
}

double power_1mg(double x, double gamma) {
    if (!(x > 0.0)) {
        throw std::invalid_argument("x must be strictly positive");
    }
    return std::exp((1.0 - gamma) * std::log(x));
}

double merton_constant(const ModelSpec& spec) {
    const double g = spec.gamma();
    const double m = spec.margin();
    if (!(m > 0.0)) {
        throw std::invalid_argument("ill-posed spec: margin = " + std::to_string(m));
    }
    // a = (margin / gamma)^(-gamma); margin/gamma equals kappa_hat = a^(-1/gamma).
    return std::exp(-g * std::log(m / g));
}

double value(const ModelSpec& spec, double x) {
    const double g = spec.gamma();
    return merton_constant(spec) * power_1mg(x, g) / (1.0 - g);
}

double value_d1(const ModelSpec& spec, double x) {
    if (!(x > 0.0)) {
        throw std::invalid_argument("x must be strictly positive");
    }
    // V'(x) = a x^(-gamma)
    return merton_constant(spec) * std::exp(-spec.gamma() * std::log(x));
}

double value_d2(const ModelSpec& spec, double x) {
    const double g = spec.gamma();
    if (!(x > 0.0)) {
        throw std::invalid_argument("x must be strictly positive");
    }
    // V''(x) = -gamma a x^(-gamma-1)
    return -g * merton_constant(spec) * std::exp(-(g + 1.0) * std::log(x));
}

ProportionalStrategy optimal_strategy(const ModelSpec& spec) {
    if (!spec.is_well_posed()) {
        throw std::invalid_argument("ill-posed spec");
    }
    const double g = spec.gamma();
    const double kappa_hat = spec.margin() / g; // = a^(-1/gamma)
    return ProportionalStrategy(kappa_hat, spec.lambda() / (spec.sigma() * g));
}

WealthLaw optimal_wealth_law(const ModelSpec& spec) {
    if (!spec.is_well_posed()) {
        throw std::invalid_argument("ill-posed spec");
    }
    const double g = spec.gamma();
    WealthLaw law;
    law.drift = (spec.r() - spec.rho()) / g + spec.lambda() * spec.lambda() / (2.0 * g);
    law.vol = spec.lambda() / g;
    return law;
}

double growth_exponent(const ModelSpec& spec, const ProportionalStrategy& strat) {
    const double g = spec.gamma();
    const double st = spec.sigma() * strat.theta;
    return (1.0 - g) * (spec.r() + spec.lambda() * st - strat.kappa) -
           0.5 * g * (1.0 - g) * st * st;
}

double proportional_objective(const ModelSpec& spec,
                              const ProportionalStrategy& strat, double x) {
    if (!(x > 0.0)) {
        throw std::invalid_argument("x must be strictly positive");
    }
    const double g = spec.gamma();
    if (strat.kappa == 0.0) {
        return -kInf; // utility of zero consumption
    }
    const double growth = growth_exponent(spec, strat);
    if (spec.rho() <= growth) {
        return -kInf; // discounted utility integral diverges
    }
    return power_1mg(x, g) * power_1mg(strat.kappa, g) /
           ((1.0 - g) * (spec.rho() - growth));
}

double transversality_exponent(const ModelSpec& spec, double alpha) {
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("alpha must be strictly positive");
    }
    return -spec.rho() + (1.0 - spec.gamma()) * (spec.r() - alpha);
}

ClosedFormSolution solve_closed_form(const ModelSpec& spec) {
    ClosedFormSolution sol;
    sol.a = merton_constant(spec);
    const ProportionalStrategy opt = optimal_strategy(spec);
    sol.kappa_hat = opt.kappa;
    sol.theta_hat = opt.theta;
    const WealthLaw law = optimal_wealth_law(spec);
    sol.drift_opt = law.drift;
    sol.vol_opt = law.vol;
    sol.kappa0 = spec.kappa_max();
    sol.margin = spec.margin();
    return sol;
}

nlohmann::json to_json(const ClosedFormSolution& sol) {
    return nlohmann::json{{"a", sol.a},
                          {"kappa_hat", sol.kappa_hat},
                          {"theta_hat", sol.theta_hat},
                          {"drift_opt", sol.drift_opt},
                          {"vol_opt", sol.vol_opt},
                          {"kappa0", sol.kappa0},
                          {"margin", sol.margin}};
}

} // namespace merton
