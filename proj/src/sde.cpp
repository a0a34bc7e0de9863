#include "merton/sde.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace merton {

namespace {

constexpr double kEulerFloor = 1e-300;
// Cap on doubles per stored matrix; streaming checks avoid this entirely.
constexpr std::size_t kMaxBundleEntries = 30'000'000;

} // namespace

const char* scheme_name(Scheme scheme) {
    return scheme == Scheme::ExactLog ? "exact-log" : "euler";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "exact-log") return Scheme::ExactLog;
    if (name == "euler") return Scheme::Euler;
    throw std::invalid_argument("unknown scheme: " + name);
}

void SimConfig::validate() const {
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (paths < 1) throw std::invalid_argument("paths must be >= 1");
}

PathSim::PathSim(const ModelSpec& spec, const ProportionalStrategy& strat,
                 double x0, const SimConfig& cfg)
    : cfg_(cfg), strat_(strat), rng_(cfg.seed), x0_(x0),
      euler_(cfg.scheme == Scheme::Euler) {
    cfg_.validate();
    if (!(x0 > 0.0)) {
        throw std::invalid_argument("initial wealth must be strictly positive");
    }
    const double dt = cfg_.dt();
    const double sq_dt = std::sqrt(dt);
    const double lam = spec.lambda();
    const double st = spec.sigma() * strat_.theta; // wealth volatility
    const double drift = spec.r() + lam * st - strat_.kappa;
    log_drift_dt_ = (drift - 0.5 * st * st) * dt;
    euler_drift_dt_ = drift * dt;
    vol_sqdt_ = st * sq_dt;
    defl_drift_dt_ = (-spec.r() - 0.5 * lam * lam) * dt;
    defl_vol_sqdt_ = -lam * sq_dt;
    reset(0);
}

void PathSim::reset(std::uint64_t path_index) {
    path_ = path_index;
    k_ = 0;
    x_ = x0_;
    log_x_ = std::log(x0_);
    y_ = 1.0;
    log_y_ = 0.0;
}

void PathSim::step() {
    ++k_;
    const double z = rng_.normal(path_, static_cast<std::uint64_t>(k_));
    if (euler_) {
        x_ += x_ * (euler_drift_dt_ + vol_sqdt_ * z);
        if (x_ < kEulerFloor) {
            x_ = kEulerFloor;
            ++clips_;
        }
        log_x_ = std::log(x_);
    } else {
        log_x_ += log_drift_dt_ + vol_sqdt_ * z;
        x_ = std::exp(log_x_);
    }
    log_y_ += defl_drift_dt_ + defl_vol_sqdt_ * z;
    y_ = std::exp(log_y_);
}

PathBundle simulate(const ModelSpec& spec, const ProportionalStrategy& strat,
                    double x0, const SimConfig& cfg) {
    PathSim sim(spec, strat, x0, cfg);
    const std::size_t cols = static_cast<std::size_t>(cfg.steps) + 1;
    if (static_cast<std::size_t>(cfg.paths) * cols > kMaxBundleEntries) {
        throw std::invalid_argument(
            "path bundle too large to store; reduce paths or steps");
    }

    PathBundle bundle;
    bundle.x0 = x0;
    bundle.seed = cfg.seed;
    bundle.scheme = cfg.scheme;
    bundle.paths = cfg.paths;
    bundle.steps = cfg.steps;
    bundle.horizon = cfg.horizon;
    bundle.times.resize(cols);
    const double dt = cfg.dt();
    for (std::size_t k = 0; k < cols; ++k) {
        bundle.times[k] = static_cast<double>(k) * dt;
    }
    bundle.wealth.resize(cfg.paths * cols);
    bundle.consumption.resize(cfg.paths * cols);
    bundle.deflator.resize(cfg.paths * cols);
    bundle.deflated_consumption_integral.resize(cfg.paths);

    for (int i = 0; i < cfg.paths; ++i) {
        sim.reset(static_cast<std::uint64_t>(i));
        const std::size_t base = static_cast<std::size_t>(i) * cols;
        double integral = 0.0;
        double prev_yc = sim.deflator() * sim.consumption();
        bundle.wealth[base] = sim.wealth();
        bundle.consumption[base] = sim.consumption();
        bundle.deflator[base] = sim.deflator();
        while (!sim.done()) {
            sim.step();
            const std::size_t j = base + sim.step_index();
            bundle.wealth[j] = sim.wealth();
            bundle.consumption[j] = sim.consumption();
            bundle.deflator[j] = sim.deflator();
            const double yc = sim.deflator() * sim.consumption();
            integral += 0.5 * (prev_yc + yc) * dt;
            prev_yc = yc;
        }
        bundle.deflated_consumption_integral[i] = integral;
    }
    bundle.clip_count = sim.clip_count();
    return bundle;
}

PathBundle optimal_path_exact(const ModelSpec& spec, double x0, const SimConfig& cfg) {
    // The exact-log step of the closed-loop SDE reproduces the explicit
    // lognormal solution exactly in law at the grid points.
    if (!spec.is_well_posed()) {
        throw std::invalid_argument("ill-posed spec");
    }
    SimConfig exact_cfg = cfg;
    exact_cfg.scheme = Scheme::ExactLog;
    return simulate(spec, optimal_strategy(spec), x0, exact_cfg);
}

std::vector<double> martingale_samples(const ModelSpec& spec,
                                       const ProportionalStrategy& strat,
                                       double x0, const SimConfig& cfg) {
    PathSim sim(spec, strat, x0, cfg);
    const double dt = cfg.dt();
    std::vector<double> samples(cfg.paths);
    for (int i = 0; i < cfg.paths; ++i) {
        sim.reset(static_cast<std::uint64_t>(i));
        double integral = 0.0;
        double prev_yc = sim.deflator() * sim.consumption();
        while (!sim.done()) {
            sim.step();
            const double yc = sim.deflator() * sim.consumption();
            integral += 0.5 * (prev_yc + yc) * dt;
            prev_yc = yc;
        }
        samples[i] = sim.deflator() * sim.wealth() + integral;
    }
    return samples;
}

void PathBundle::write_csv(std::ostream& out) const {
    char line[160];
    out << "path_id,t,X,c,Y\n";
    for (int i = 0; i < paths; ++i) {
        for (int k = 0; k <= steps; ++k) {
            std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g\n", i,
                          times[k], wealth_at(i, k), consumption_at(i, k),
                          deflator_at(i, k));
            out << line;
        }
    }
}

nlohmann::json PathBundle::summary_json() const {
    double mean_xt = 0.0, mean_int = 0.0;
    for (int i = 0; i < paths; ++i) {
        mean_xt += wealth_at(i, steps);
        mean_int += deflated_consumption_integral[i];
    }
    mean_xt /= paths;
    mean_int /= paths;
    double var_xt = 0.0;
    for (int i = 0; i < paths; ++i) {
        const double d = wealth_at(i, steps) - mean_xt;
        var_xt += d * d;
    }
    var_xt = paths > 1 ? var_xt / (paths - 1) : 0.0;
    return nlohmann::json{
        {"x0", x0},
        {"seed", seed},
        {"scheme", scheme_name(scheme)},
        {"paths", paths},
        {"steps", steps},
        {"horizon", horizon},
        {"clip_count", clip_count},
        {"mean_terminal_wealth", mean_xt},
        {"sd_terminal_wealth", std::sqrt(var_xt)},
        {"mean_deflated_consumption_integral", mean_int}};
}

} // namespace merton
