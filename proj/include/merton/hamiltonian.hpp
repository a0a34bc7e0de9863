#pragma once

#include <optional>

#include "merton/model.hpp"

namespace merton {

// Candidate first and second derivative of a value function at a point.
struct Derivs {
    double p = 0.0;
    double P = 0.0;
};

// Control pair at a single state.
struct ControlPoint {
    double c = 0.0;
    double pi = 0.0;
};

// Current-value Hamiltonian
//   Hcv(x, p, P; c, pi) = r x p + pi sigma lambda p + pi^2 sigma^2 P / 2
//                         - c p + c^(1-gamma) / (1-gamma).
// c = 0 yields -inf for gamma > 1; that is a legal value, not an error.
double hcv(const ModelSpec& spec, double x, const Derivs& d, double c, double pi);

// Unique maximizer (c, pi) = (p^(-1/gamma), -lambda p / (sigma P)).
// Requires p > 0 and P < 0; throws otherwise.
ControlPoint maximizers(const ModelSpec& spec, double x, const Derivs& d);

// Maximized Hamiltonian. For p > 0, P < 0:
//   H_max = r x p - lambda^2 p^2 / (2 P) + gamma/(1-gamma) p^((gamma-1)/gamma).
// For p = 0, P <= 0 the supremum is 0 (c -> inf limit of the utility term, pi = 0).
// Returns nullopt when the supremum is +inf (p < 0, or p > 0 with P >= 0,
// or p = 0 with P > 0).
std::optional<double> h_max(const ModelSpec& spec, double x, const Derivs& d);

// Pointwise stationary HJB residual rho v - H_max(x, p, P) for a candidate
// triple (v, p, P). nullopt propagates an unbounded Hamiltonian.
std::optional<double> hjb_residual(const ModelSpec& spec, double x, double v,
                                   double p, double P);

} // namespace merton
