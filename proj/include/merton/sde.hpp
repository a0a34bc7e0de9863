#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "merton/closed_form.hpp"
#include "merton/model.hpp"
#include "merton/rng.hpp"

namespace merton {

enum class Scheme { ExactLog, Euler };

const char* scheme_name(Scheme scheme);
Scheme scheme_from_name(const std::string& name);

struct SimConfig {
    double horizon = 1.0;
    int steps = 100;
    int paths = 1;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::ExactLog;

    void validate() const;
    double dt() const { return horizon / steps; }
};

// Walks a single wealth/deflator trajectory under a proportional strategy.
// Normal draws come from counter-based substreams keyed by the path index,
// so trajectories are a pure function of (spec, strat, x0, cfg, path) and
// paths can be evaluated in any order or concurrently.
//
// Wealth steps either by the exact lognormal increment of the proportional
// SDE (exact-log) or by Euler-Maruyama; the deflator always steps by its
// exact lognormal increment using the same draws. Euler wealth is floored
// at 1e-300 to avoid sign flips; floor hits are counted.
class PathSim {
public:
    PathSim(const ModelSpec& spec, const ProportionalStrategy& strat, double x0,
            const SimConfig& cfg);

    void reset(std::uint64_t path_index);
    void step();

    int step_index() const { return k_; }
    bool done() const { return k_ >= cfg_.steps; }
    double t() const { return k_ * cfg_.dt(); }
    double wealth() const { return x_; }
    double log_wealth() const { return log_x_; }
    double consumption() const { return strat_.kappa * x_; }
    double deflator() const { return y_; }
    double log_deflator() const { return log_y_; }
    long clip_count() const { return clips_; }

    const SimConfig& config() const { return cfg_; }
    const ProportionalStrategy& strategy() const { return strat_; }

private:
    SimConfig cfg_;
    ProportionalStrategy strat_;
    CounterRng rng_;
    std::uint64_t path_ = 0;
    int k_ = 0;
    double x0_;
    double x_ = 0.0, log_x_ = 0.0;
    double y_ = 1.0, log_y_ = 0.0;
    long clips_ = 0;
    bool euler_;
    // precomputed per-step coefficients
    double log_drift_dt_, vol_sqdt_, euler_drift_dt_;
    double defl_drift_dt_, defl_vol_sqdt_;
};

// Seeded set of simulated trajectories on a uniform time grid.
struct PathBundle {
    std::vector<double> times;                         // steps + 1
    std::vector<double> wealth;                        // paths x (steps+1)
    std::vector<double> consumption;                   // paths x (steps+1)
    std::vector<double> deflator;                      // paths x (steps+1)
    std::vector<double> deflated_consumption_integral; // per path, trapezoidal
    double x0 = 0.0;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::ExactLog;
    int paths = 0;
    int steps = 0;
    double horizon = 0.0;
    long clip_count = 0;

    double wealth_at(int path, int k) const { return wealth[idx(path, k)]; }
    double consumption_at(int path, int k) const { return consumption[idx(path, k)]; }
    double deflator_at(int path, int k) const { return deflator[idx(path, k)]; }

    // Long format: path_id,t,X,c,Y
    void write_csv(std::ostream& out) const;
    nlohmann::json summary_json() const;

private:
    std::size_t idx(int path, int k) const {
        return static_cast<std::size_t>(path) * (steps + 1) + k;
    }
};

// Simulates cfg.paths trajectories under the given proportional strategy.
// Well-posedness is not required; simulation is legal even when J diverges.
PathBundle simulate(const ModelSpec& spec, const ProportionalStrategy& strat,
                    double x0, const SimConfig& cfg);

// Samples the optimal wealth process directly from its explicit lognormal
// solution (exact in law at the grid points). Requires a well-posed spec.
PathBundle optimal_path_exact(const ModelSpec& spec, double x0, const SimConfig& cfg);

// Per-path terminal values of M_T = Y_T X_T + int_0^T Y_s c_s ds.
std::vector<double> martingale_samples(const ModelSpec& spec,
                                       const ProportionalStrategy& strat,
                                       double x0, const SimConfig& cfg);

} // namespace merton
