#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "merton/closed_form.hpp"
#include "merton/model.hpp"
#include "merton/sde.hpp"

namespace merton {

// Monte-Carlo estimate with a statistical error bar and an analytic bound on
// the non-statistical remainder (truncated-horizon tail, or the trapezoid
// bias on the mean where that is the relevant term). The confidence interval
// is estimate +/- (3 std_error + tail_bound).
struct EvalResult {
    double estimate = 0.0;
    double std_error = 0.0;
    double tail_bound = 0.0;
    int n_paths = 0;
    double horizon = 0.0;
};

nlohmann::json to_json(const EvalResult& r);

// Default truncation horizon max(10, 12/(rho - g)); the discarded tail is
// then below e^-12 of the leading scale. Requires rho > g.
double default_horizon(const ModelSpec& spec, const ProportionalStrategy& strat);

// Estimate of E[int_0^T e^{-rho s} c_s^{1-gamma}/(1-gamma) ds] by trapezoidal
// quadrature over simulated paths. nullopt when rho <= g (divergent integral);
// throws on kappa <= 0.
std::optional<EvalResult> mc_objective(const ModelSpec& spec,
                                       const ProportionalStrategy& strat,
                                       double x, const SimConfig& cfg);

// Budget constraint: MC estimate of E[int_0^T Y c ds] against both the bound
// x and the lognormal identity x (1 - e^{-kappa T}).
struct BudgetCheck {
    EvalResult integral;
    double analytic = 0.0;       // x (1 - e^{-kappa T})
    double quad_bias_bound = 0.0;
    bool within_budget = false;
    bool matches_analytic = false;
    bool pass = false;
};

BudgetCheck budget_check(const ModelSpec& spec, const ProportionalStrategy& strat,
                         double x, const SimConfig& cfg);

// Per-time drift of the sample mean of M_t = Y_t X_t + int_0^t Y c ds away
// from x. A grid time passes when |mean - x| <= 3 std_error plus the
// trapezoid bias allowance; the check passes when >= 95% of times do.
struct MartingaleCheck {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> std_error;
    double x = 0.0;
    int times_passed = 0;
    int times_total = 0;
    bool pass = false;
};

MartingaleCheck martingale_check(const ModelSpec& spec,
                                 const ProportionalStrategy& strat, double x,
                                 const SimConfig& cfg);

// value(alpha x) = alpha^(1-gamma) value(x) over all pairs, relative 1e-12.
struct HomogeneityCheck {
    double max_rel_err = 0.0;
    bool pass = false;
};

HomogeneityCheck homogeneity_check(const ModelSpec& spec,
                                   const std::vector<double>& alphas,
                                   const std::vector<double>& xs);

// Max over the grid of |rho v - H_max| / max(|rho V(x)|, floor) for the
// closed-form triple. scale_a perturbs the candidate triple (scale 1 is the
// closed form); used to demonstrate that a wrong constant is detected.
double residual_sweep(const ModelSpec& spec, const std::vector<double>& x_grid,
                      double scale_a = 1.0);

// Closed-form objective over a strategy grid; the argmax must land on the
// grid point nearest the optimal pair.
struct SweepEntry {
    double kappa = 0.0;
    double theta = 0.0;
    double objective = 0.0;
};

struct StrategySweep {
    ProportionalStrategy argmax;
    std::vector<SweepEntry> table;
    bool argmax_is_optimal = false;
};

StrategySweep strategy_grid_sweep(const ModelSpec& spec, double x,
                                  const std::vector<double>& kappa_grid,
                                  const std::vector<double>& theta_grid);

// e^{-rho t} V(X_t) along the deterministic path of c = alpha x, pi = 0:
// the table of V(x) e^{xi(alpha) t} and the limit verdict.
enum class TransversalityVerdict { Diverges, Vanishes, Constant };

const char* verdict_name(TransversalityVerdict verdict);

struct TransversalityProbe {
    double exponent = 0.0;
    std::vector<double> times;
    std::vector<double> values;
    TransversalityVerdict verdict = TransversalityVerdict::Constant;
};

TransversalityProbe transversality_probe(const ModelSpec& spec, double alpha,
                                         const std::vector<double>& t_grid,
                                         double x = 1.0);

// One verdict record per check, aggregated into the battery report.
struct CheckRecord {
    std::string name;
    bool pass = false;
    nlohmann::json details;
};

struct BatteryOptions {
    std::uint64_t seed = 1;
    int mc_paths = 10000;
    int sweep_paths = 1000;
    double debug_scale_a = 1.0; // corrupts the residual-sweep triple when != 1
};

struct BatteryReport {
    std::vector<CheckRecord> checks;
    bool all_pass = false;
    nlohmann::json report; // full machine-readable report
};

// The whole claim battery on one spec: scalar constant, residual sweep,
// homogeneity, three-way objective agreement, budget, martingale mean,
// strategy sweep, transversality probe, HJB policy-iteration cross-check.
BatteryReport run_battery(const ModelSpec& spec, const BatteryOptions& opts);

// FNV-1a digest of a canonical JSON dump; used to stamp verdict records.
std::string digest_hex(const nlohmann::json& j);

} // namespace merton
