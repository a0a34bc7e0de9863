#include "merton/hamiltonian.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace merton {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double hcv(const ModelSpec& spec, double x, const Derivs& d, double c, double pi) {
    if (!(x > 0.0)) {
        throw std::invalid_argument("x must be strictly positive");
    }
    if (c < 0.0) {
        throw std::invalid_argument("consumption must be >= 0");
    }
    const double g = spec.gamma();
    const double s = spec.sigma();
    double utility;
    if (c == 0.0) {
        utility = -kInf;
    } else {
        utility = std::exp((1.0 - g) * std::log(c)) / (1.0 - g);
    }
    return spec.r() * x * d.p + pi * s * spec.lambda() * d.p +
           0.5 * pi * pi * s * s * d.P - c * d.p + utility;
}

ControlPoint maximizers(const ModelSpec& spec, double x, const Derivs& d) {
    if (!(x > 0.0)) {
        throw std::invalid_argument("x must be strictly positive");
    }
    if (!(d.p > 0.0) || !(d.P < 0.0)) {
        throw std::invalid_argument("maximizer formula requires p > 0 and P < 0");
    }
    ControlPoint ctrl;
    ctrl.c = std::exp(-std::log(d.p) / spec.gamma());
    ctrl.pi = -spec.lambda() * d.p / (spec.sigma() * d.P);
    return ctrl;
}

std::optional<double> h_max(const ModelSpec& spec, double x, const Derivs& d) {
    if (!(x > 0.0)) {
        throw std::invalid_argument("x must be strictly positive");
    }
    const double g = spec.gamma();
    if (d.p == 0.0) {
        // sup_c of c^(1-gamma)/(1-gamma) is 0 for gamma > 1; the pi part
        // is 0 at pi = 0 when P <= 0, unbounded when P > 0.
        if (d.P <= 0.0) {
            return 0.0;
        }
        return std::nullopt;
    }
    if (d.p < 0.0 || d.P >= 0.0) {
        return std::nullopt; // supremum is +inf
    }
    const double lam = spec.lambda();
    return spec.r() * x * d.p - 0.5 * lam * lam * d.p * d.p / d.P +
           g / (1.0 - g) * std::exp((g - 1.0) / g * std::log(d.p));
}

std::optional<double> hjb_residual(const ModelSpec& spec, double x, double v,
                                   double p, double P) {
    const std::optional<double> h = h_max(spec, x, Derivs{p, P});
    if (!h) {
        return std::nullopt;
    }
    return spec.rho() * v - *h;
}

} // namespace merton
