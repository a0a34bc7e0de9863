#include "merton/hjb_numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "merton/closed_form.hpp"
#include "merton/hamiltonian.hpp"

namespace merton {

namespace {

// Tridiagonal solve (Thomas algorithm). Diagonals are overwritten.
void solve_tridiagonal(std::vector<double>& lower, std::vector<double>& diag,
                       std::vector<double>& upper, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
}

struct NodePolicy {
    std::vector<double> kappa; // consumption fraction c/x per interior node
    std::vector<double> theta; // risky fraction pi/x per interior node
};

// Per-node coefficients of the log-wealth evaluation ODE
//   rho w = s w'' + b w' + u,  s = sigma^2 theta^2 / 2,
//   b = r + sigma lambda theta - kappa - s, u = (kappa x)^(1-gamma)/(1-gamma).
struct OdeCoeffs {
    std::vector<double> b, s, u;
};

OdeCoeffs ode_coeffs(const ModelSpec& spec, const std::vector<double>& x,
                     const NodePolicy& policy) {
    const std::size_t n = x.size();
    OdeCoeffs co;
    co.b.resize(n);
    co.s.resize(n);
    co.u.resize(n);
    const double g = spec.gamma();
    for (std::size_t j = 0; j < n; ++j) {
        const double st = spec.sigma() * policy.theta[j];
        co.s[j] = 0.5 * st * st;
        co.b[j] = spec.r() + spec.lambda() * st - policy.kappa[j] - co.s[j];
        co.u[j] = power_1mg(policy.kappa[j] * x[j], g) / (1.0 - g);
    }
    return co;
}

// Monotone first-order upwind solve of rho w = s w'' + b w' + rhs with
// Dirichlet values w_lo, w_hi one node outside each end of the interior.
std::vector<double> solve_upwind(const ModelSpec& spec, const OdeCoeffs& co,
                                 const std::vector<double>& rhs, double h,
                                 double w_lo, double w_hi) {
    const std::size_t n = rhs.size();
    std::vector<double> lower(n), diag(n), upper(n), b(rhs);
    const double rho = spec.rho();
    for (std::size_t j = 0; j < n; ++j) {
        const double bp = std::max(co.b[j], 0.0);
        const double bm = std::max(-co.b[j], 0.0);
        const double sh = co.s[j] / (h * h);
        diag[j] = rho + 2.0 * sh + (bp + bm) / h;
        upper[j] = -(sh + bp / h);
        lower[j] = -(sh + bm / h);
    }
    b[0] -= lower[0] * w_lo;
    b[n - 1] -= upper[n - 1] * w_hi;
    solve_tridiagonal(lower, diag, upper, b);
    return b;
}

// rho w - s w'' - b w' with the first-order upwind stencil, at interior node j
// of the padded vector w (w[0] and w[n+1] are the boundary values).
double apply_l1(const ModelSpec& spec, const OdeCoeffs& co,
                const std::vector<double>& w, std::size_t j, double h) {
    const double wj = w[j + 1];
    const double d2 = (w[j + 2] - 2.0 * wj + w[j]) / (h * h);
    const double d1 = co.b[j] >= 0.0 ? (w[j + 2] - wj) / h : (wj - w[j]) / h;
    return spec.rho() * wj - co.s[j] * d2 - co.b[j] * d1;
}

// Same operator with second-order differences: central drift where the
// monotonicity condition s >= |b| h / 2 holds, otherwise an upwind-biased
// 3-point one-sided stencil (falling back to central beside a boundary).
double apply_l2(const ModelSpec& spec, const OdeCoeffs& co,
                const std::vector<double>& w, std::size_t j, double h) {
    const std::size_t n = w.size() - 2;
    const double wj = w[j + 1];
    const double d2 = (w[j + 2] - 2.0 * wj + w[j]) / (h * h);
    double d1;
    const double bj = co.b[j];
    if (co.s[j] >= 0.5 * std::fabs(bj) * h) {
        d1 = (w[j + 2] - w[j]) / (2.0 * h);
    } else if (bj >= 0.0 && j + 2 <= n) {
        d1 = (-3.0 * wj + 4.0 * w[j + 2] - w[j + 3]) / (2.0 * h);
    } else if (bj < 0.0 && j >= 1) {
        d1 = (3.0 * wj - 4.0 * w[j] + w[j - 1]) / (2.0 * h);
    } else {
        d1 = (w[j + 2] - w[j]) / (2.0 * h);
    }
    return spec.rho() * wj - co.s[j] * d2 - bj * d1;
}

std::vector<double> pad(const std::vector<double>& interior, double w_lo,
                        double w_hi) {
    std::vector<double> w(interior.size() + 2);
    w.front() = w_lo;
    std::copy(interior.begin(), interior.end(), w.begin() + 1);
    w.back() = w_hi;
    return w;
}

// Policy evaluation: monotone upwind solve plus defect-correction sweeps
// toward the second-order operator. Every solve is tridiagonal.
std::vector<double> evaluate_policy(const ModelSpec& spec, const OdeCoeffs& co,
                                    double h, double w_lo, double w_hi) {
    constexpr int kDefectSweeps = 3;
    const std::size_t n = co.u.size();
    std::vector<double> w = solve_upwind(spec, co, co.u, h, w_lo, w_hi);
    std::vector<double> rhs(n);
    for (int sweep = 0; sweep < kDefectSweeps; ++sweep) {
        const std::vector<double> padded = pad(w, w_lo, w_hi);
        for (std::size_t j = 0; j < n; ++j) {
            rhs[j] = co.u[j] + apply_l1(spec, co, padded, j, h) -
                     apply_l2(spec, co, padded, j, h);
        }
        w = solve_upwind(spec, co, rhs, h, w_lo, w_hi);
    }
    return w;
}

} // namespace

void Grid::validate() const {
    if (!(y_min < y_max)) {
        throw std::invalid_argument("grid requires y_min < y_max");
    }
    if (n_nodes < 16) {
        throw std::invalid_argument("grid requires at least 16 interior nodes");
    }
}

double solve_scalar_constant(const ModelSpec& spec, double tol, int max_iter) {
    if (!spec.is_well_posed()) {
        throw std::invalid_argument("ill-posed spec");
    }
    const double g = spec.gamma();
    const double lhs = spec.rho() / (1.0 - g) - spec.r() -
                       spec.lambda() * spec.lambda() / (2.0 * g);
    // phi(L) = lhs - gamma/(1-gamma) exp(-L/gamma); strictly decreasing,
    // phi(-inf) = +inf, phi(+inf) = margin/(1-gamma) < 0.
    const auto phi = [&](double log_b) {
        return lhs - g / (1.0 - g) * std::exp(-log_b / g);
    };
    double lo = 0.0, hi = 0.0;
    double width = 1.0;
    while (phi(lo) <= 0.0) {
        lo -= width;
        width *= 2.0;
        if (width > 1e9) throw std::runtime_error("scalar solve: bracket failed");
    }
    width = 1.0;
    while (phi(hi) >= 0.0) {
        hi += width;
        width *= 2.0;
        if (width > 1e9) throw std::runtime_error("scalar solve: bracket failed");
    }
    double log_b = 0.5 * (lo + hi);
    for (int it = 0; it < max_iter; ++it) {
        const double f = phi(log_b);
        if (f > 0.0) {
            lo = log_b;
        } else {
            hi = log_b;
        }
        const double df = std::exp(-log_b / g) / (1.0 - g);
        double next = log_b - f / df;
        if (!(next > lo) || !(next < hi)) {
            next = 0.5 * (lo + hi); // bisection safeguard
        }
        const double change = std::fabs(next - log_b);
        log_b = next;
        if (change <= 0.5 * tol || hi - lo <= 0.5 * tol) {
            return std::exp(log_b);
        }
    }
    throw std::runtime_error("scalar solve: no convergence");
}

NumericSolution policy_iteration(const ModelSpec& spec, const Grid& grid,
                                 double tol, int max_iter) {
    grid.validate();
    if (!spec.is_well_posed()) {
        throw std::invalid_argument("ill-posed spec");
    }
    const double g = spec.gamma();
    const int n = grid.n_nodes;
    const double h = grid.spacing();

    std::vector<double> x(n);
    for (int j = 0; j < n; ++j) {
        x[j] = std::exp(grid.y_min + (j + 1) * h);
    }

    // Dirichlet boundary values from the closed-form shape scaled by the
    // independently solved constant.
    const double a_num = solve_scalar_constant(spec, 1e-13, 200);
    const double w_lo = a_num * power_1mg(std::exp(grid.y_min), g) / (1.0 - g);
    const double w_hi = a_num * power_1mg(std::exp(grid.y_max), g) / (1.0 - g);

    // Strictly negative concave power-shape seed, scaled so the first greedy
    // consumption fraction (a_seed^(-1/gamma)) sits safely inside (0, kappa_0);
    // this keeps p > 0, P < 0 at the first improvement (away from the v = 0
    // trap) and keeps the first evaluated policy's objective finite, so no
    // boundary layer forms against the Dirichlet data.
    const double kappa_seed = 0.5 * spec.kappa_max();
    const double a_seed = std::exp(-g * std::log(kappa_seed));
    std::vector<double> w(n);
    for (int j = 0; j < n; ++j) {
        w[j] = a_seed * power_1mg(x[j], g) / (1.0 - g);
    }
    // Boundary values consistent with the current iterate: the seed's own
    // extension before the first solve, the Dirichlet data afterwards.
    double cur_lo = a_seed * power_1mg(std::exp(grid.y_min), g) / (1.0 - g);
    double cur_hi = a_seed * power_1mg(std::exp(grid.y_max), g) / (1.0 - g);

    NumericSolution sol;
    sol.x = x;
    sol.boundary_mode = "dirichlet-closed-form";

    NodePolicy policy{std::vector<double>(n), std::vector<double>(n)};
    NodePolicy prev = policy;
    bool have_prev = false;

    const auto improve = [&](const std::vector<double>& values) {
        const std::vector<double> padded = pad(values, cur_lo, cur_hi);
        for (int j = 0; j < n; ++j) {
            const double d1 = (padded[j + 2] - padded[j]) / (2.0 * h);
            const double d2 = (padded[j + 2] - 2.0 * padded[j + 1] + padded[j]) / (h * h);
            const double p = d1 / x[j];
            const double P = (d2 - d1) / (x[j] * x[j]);
            if (!(p > 0.0) || !(P < 0.0)) {
                char msg[160];
                std::snprintf(msg, sizeof(msg),
                              "policy improvement guard: node %d, x=%.6g, p=%.6g, P=%.6g",
                              j, x[j], p, P);
                throw std::runtime_error(msg);
            }
            const ControlPoint ctrl = maximizers(spec, x[j], Derivs{p, P});
            policy.kappa[j] = ctrl.c / x[j];
            policy.theta[j] = ctrl.pi / x[j];
        }
    };

    const auto max_residual = [&](const std::vector<double>& values) {
        const std::vector<double> padded = pad(values, w_lo, w_hi);
        double worst = 0.0;
        for (int j = 0; j < n; ++j) {
            const double d1 = (padded[j + 2] - padded[j]) / (2.0 * h);
            const double d2 = (padded[j + 2] - 2.0 * padded[j + 1] + padded[j]) / (h * h);
            const double p = d1 / x[j];
            const double P = (d2 - d1) / (x[j] * x[j]);
            const auto res = hjb_residual(spec, x[j], values[j], p, P);
            if (!res) {
                // rough intermediate iterate; report it rather than abort
                return std::numeric_limits<double>::infinity();
            }
            worst = std::max(worst, std::fabs(*res));
        }
        return worst;
    };

    for (int it = 1; it <= max_iter; ++it) {
        improve(w);
        const OdeCoeffs co = ode_coeffs(spec, x, policy);
        w = evaluate_policy(spec, co, h, w_lo, w_hi);
        cur_lo = w_lo;
        cur_hi = w_hi;
        sol.iterations = it;
        sol.residual_history.push_back(max_residual(w));

        if (have_prev) {
            double delta = 0.0;
            for (int j = 0; j < n; ++j) {
                delta = std::max(delta, std::fabs(policy.kappa[j] - prev.kappa[j]));
                delta = std::max(delta, std::fabs(policy.theta[j] - prev.theta[j]));
            }
            if (delta <= tol) {
                sol.converged = true;
            }
        }
        prev = policy;
        have_prev = true;
        if (sol.converged) break;
    }

    sol.v = w;
    sol.final_residual = sol.residual_history.back();
    sol.c.resize(n);
    sol.pi.resize(n);
    for (int j = 0; j < n; ++j) {
        sol.c[j] = policy.kappa[j] * x[j];
        sol.pi[j] = policy.theta[j] * x[j];
    }
    for (int j = 0; j < n; ++j) {
        if (!(sol.v[j] < 0.0)) {
            throw std::runtime_error("numeric solution is not strictly negative");
        }
    }
    return sol;
}

void write_node_table_csv(std::ostream& out, const ModelSpec& spec,
                          const NumericSolution& sol) {
    char line[200];
    out << "x,v_num,v_closed,rel_err,c_frac,pi_frac\n";
    for (std::size_t j = 0; j < sol.x.size(); ++j) {
        const double v_ref = value(spec, sol.x[j]);
        const double rel = std::fabs(sol.v[j] - v_ref) / std::fabs(v_ref);
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      sol.x[j], sol.v[j], v_ref, rel, sol.c[j] / sol.x[j],
                      sol.pi[j] / sol.x[j]);
        out << line;
    }
}

} // namespace merton
