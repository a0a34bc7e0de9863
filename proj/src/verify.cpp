#include "merton/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "merton/hamiltonian.hpp"
#include "merton/hjb_numeric.hpp"
#include "merton/rng.hpp"

namespace merton {

namespace {

// Welford accumulator; stable for the heavy-tailed per-path integrals.
struct Accum {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double v) {
        ++n;
        const double d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
    }
    double std_error() const {
        return n > 1 ? std::sqrt(m2 / (n - 1) / n) : 0.0;
    }
};

std::vector<double> log_spaced(double lo, double hi, int count) {
    std::vector<double> grid(count);
    const double step = (std::log(hi) - std::log(lo)) / (count - 1);
    for (int i = 0; i < count; ++i) {
        grid[i] = std::exp(std::log(lo) + i * step);
    }
    return grid;
}

// Trapezoid bias allowance for the sample mean of int_0^t Y c ds: the exact
// mean kappa x e^{-kappa s} gives a composite-rule bias below
// (dt^2/12) kappa^2 x (1 - e^{-kappa t}); keep 1.5x headroom for the
// higher-order terms plus a roundoff floor.
double quad_bias_bound(double kappa, double x, double dt, double t) {
    return dt * dt / 8.0 * kappa * kappa * x * (1.0 - std::exp(-kappa * t)) +
           1e-12 * x;
}

} // namespace

nlohmann::json to_json(const EvalResult& r) {
    return nlohmann::json{{"estimate", r.estimate},
                          {"std_error", r.std_error},
                          {"tail_bound", r.tail_bound},
                          {"n_paths", r.n_paths},
                          {"horizon", r.horizon}};
}

double default_horizon(const ModelSpec& spec, const ProportionalStrategy& strat) {
    const double gap = spec.rho() - growth_exponent(spec, strat);
    if (!(gap > 0.0)) {
        throw std::invalid_argument("divergent strategy: rho <= growth exponent");
    }
    return std::max(10.0, 12.0 / gap);
}

std::optional<EvalResult> mc_objective(const ModelSpec& spec,
                                       const ProportionalStrategy& strat,
                                       double x, const SimConfig& cfg) {
    if (!(strat.kappa > 0.0)) {
        throw std::invalid_argument("mc_objective requires kappa > 0");
    }
    const double growth = growth_exponent(spec, strat);
    if (spec.rho() <= growth) {
        return std::nullopt;
    }
    cfg.validate();
    const double g = spec.gamma();
    const double dt = cfg.dt();
    std::vector<double> disc(cfg.steps + 1);
    for (int k = 0; k <= cfg.steps; ++k) {
        disc[k] = std::exp(-spec.rho() * k * dt);
    }
    const double util_coeff = power_1mg(strat.kappa, g) / (1.0 - g);

    PathSim sim(spec, strat, x, cfg);
    Accum acc;
    for (int i = 0; i < cfg.paths; ++i) {
        sim.reset(static_cast<std::uint64_t>(i));
        double prev = disc[0] * util_coeff *
                      std::exp((1.0 - g) * sim.log_wealth());
        double q = 0.0;
        while (!sim.done()) {
            sim.step();
            const double f = disc[sim.step_index()] * util_coeff *
                             std::exp((1.0 - g) * sim.log_wealth());
            q += 0.5 * (prev + f) * dt;
            prev = f;
        }
        acc.add(q);
    }

    EvalResult result;
    result.estimate = acc.mean;
    result.std_error = acc.std_error();
    result.tail_bound = std::fabs(power_1mg(x, g) * util_coeff) *
                        std::exp((growth - spec.rho()) * cfg.horizon) /
                        (spec.rho() - growth);
    result.n_paths = cfg.paths;
    result.horizon = cfg.horizon;
    return result;
}

BudgetCheck budget_check(const ModelSpec& spec, const ProportionalStrategy& strat,
                         double x, const SimConfig& cfg) {
    cfg.validate();
    const double dt = cfg.dt();
    PathSim sim(spec, strat, x, cfg);
    Accum acc;
    for (int i = 0; i < cfg.paths; ++i) {
        sim.reset(static_cast<std::uint64_t>(i));
        double prev = strat.kappa * std::exp(sim.log_deflator() + sim.log_wealth());
        double integral = 0.0;
        while (!sim.done()) {
            sim.step();
            const double yc =
                strat.kappa * std::exp(sim.log_deflator() + sim.log_wealth());
            integral += 0.5 * (prev + yc) * dt;
            prev = yc;
        }
        acc.add(integral);
    }

    BudgetCheck check;
    check.integral.estimate = acc.mean;
    check.integral.std_error = acc.std_error();
    check.integral.n_paths = cfg.paths;
    check.integral.horizon = cfg.horizon;
    check.quad_bias_bound = quad_bias_bound(strat.kappa, x, dt, cfg.horizon);
    check.integral.tail_bound = check.quad_bias_bound;
    check.analytic = x * (1.0 - std::exp(-strat.kappa * cfg.horizon));
    const double band = 3.0 * check.integral.std_error + check.quad_bias_bound;
    check.within_budget = check.integral.estimate <= x + band;
    check.matches_analytic = std::fabs(check.integral.estimate - check.analytic) <= band;
    check.pass = check.within_budget && check.matches_analytic;
    return check;
}

MartingaleCheck martingale_check(const ModelSpec& spec,
                                 const ProportionalStrategy& strat, double x,
                                 const SimConfig& cfg) {
    cfg.validate();
    const double dt = cfg.dt();
    const int times = cfg.steps + 1;
    std::vector<Accum> acc(times);
    PathSim sim(spec, strat, x, cfg);
    for (int i = 0; i < cfg.paths; ++i) {
        sim.reset(static_cast<std::uint64_t>(i));
        double yc_prev = strat.kappa * std::exp(sim.log_deflator() + sim.log_wealth());
        double integral = 0.0;
        acc[0].add(x);
        while (!sim.done()) {
            sim.step();
            const double yc =
                strat.kappa * std::exp(sim.log_deflator() + sim.log_wealth());
            integral += 0.5 * (yc_prev + yc) * dt;
            yc_prev = yc;
            acc[sim.step_index()].add(sim.deflator() * sim.wealth() + integral);
        }
    }

    MartingaleCheck check;
    check.x = x;
    check.times_total = times;
    check.times.resize(times);
    check.mean.resize(times);
    check.std_error.resize(times);
    for (int k = 0; k < times; ++k) {
        check.times[k] = k * dt;
        check.mean[k] = acc[k].mean;
        check.std_error[k] = acc[k].std_error();
        const double band = 3.0 * check.std_error[k] +
                            quad_bias_bound(strat.kappa, x, dt, check.times[k]);
        if (std::fabs(check.mean[k] - x) <= band) {
            ++check.times_passed;
        }
    }
    check.pass = check.times_passed >= 0.95 * check.times_total;
    return check;
}

HomogeneityCheck homogeneity_check(const ModelSpec& spec,
                                   const std::vector<double>& alphas,
                                   const std::vector<double>& xs) {
    HomogeneityCheck check;
    const double g = spec.gamma();
    for (const double alpha : alphas) {
        for (const double x : xs) {
            const double lhs = value(spec, alpha * x);
            const double rhs = power_1mg(alpha, g) * value(spec, x);
            check.max_rel_err =
                std::max(check.max_rel_err, std::fabs(lhs - rhs) / std::fabs(lhs));
        }
    }
    check.pass = check.max_rel_err <= 1e-12;
    return check;
}

double residual_sweep(const ModelSpec& spec, const std::vector<double>& x_grid,
                      double scale_a) {
    double worst = 0.0;
    for (const double x : x_grid) {
        const double v = scale_a * value(spec, x);
        const double p = scale_a * value_d1(spec, x);
        const double P = scale_a * value_d2(spec, x);
        const auto res = hjb_residual(spec, x, v, p, P);
        if (!res) {
            throw std::runtime_error("unbounded Hamiltonian in residual sweep");
        }
        const double scale = std::max(std::fabs(spec.rho() * v), 1e-300);
        worst = std::max(worst, std::fabs(*res) / scale);
    }
    return worst;
}

StrategySweep strategy_grid_sweep(const ModelSpec& spec, double x,
                                  const std::vector<double>& kappa_grid,
                                  const std::vector<double>& theta_grid) {
    if (kappa_grid.empty() || theta_grid.empty()) {
        throw std::invalid_argument("strategy grids must be non-empty");
    }
    const double kappa0 = spec.kappa_max();
    for (const double k : kappa_grid) {
        if (!(k > 0.0) || !(k < kappa0)) {
            throw std::invalid_argument("kappa grid must lie inside (0, kappa_max)");
        }
    }
    const ProportionalStrategy opt = optimal_strategy(spec);
    const auto near = [](double v, double target) {
        return std::fabs(v - target) <= 1e-9 * std::max(1.0, std::fabs(target));
    };
    bool has_kappa = false, has_theta = false;
    for (const double k : kappa_grid) has_kappa = has_kappa || near(k, opt.kappa);
    for (const double t : theta_grid) has_theta = has_theta || near(t, opt.theta);
    if (!has_kappa || !has_theta) {
        throw std::invalid_argument("strategy grids must contain the optimal pair");
    }

    StrategySweep sweep;
    double best = -std::numeric_limits<double>::infinity();
    for (const double k : kappa_grid) {
        for (const double t : theta_grid) {
            const double obj = proportional_objective(spec, {k, t}, x);
            sweep.table.push_back(SweepEntry{k, t, obj});
            if (obj > best) {
                best = obj;
                sweep.argmax = ProportionalStrategy(k, t);
            }
        }
    }
    // nearest grid point to the optimal pair
    double best_dist = std::numeric_limits<double>::infinity();
    ProportionalStrategy nearest;
    for (const SweepEntry& e : sweep.table) {
        const double dk = e.kappa - opt.kappa;
        const double dt = e.theta - opt.theta;
        const double dist = dk * dk + dt * dt;
        if (dist < best_dist) {
            best_dist = dist;
            nearest = ProportionalStrategy(e.kappa, e.theta);
        }
    }
    sweep.argmax_is_optimal =
        sweep.argmax.kappa == nearest.kappa && sweep.argmax.theta == nearest.theta;
    return sweep;
}

const char* verdict_name(TransversalityVerdict verdict) {
    switch (verdict) {
        case TransversalityVerdict::Diverges: return "diverges";
        case TransversalityVerdict::Vanishes: return "vanishes";
        default: return "constant";
    }
}

TransversalityProbe transversality_probe(const ModelSpec& spec, double alpha,
                                         const std::vector<double>& t_grid,
                                         double x) {
    TransversalityProbe probe;
    probe.exponent = transversality_exponent(spec, alpha);
    const double v0 = value(spec, x);
    probe.times = t_grid;
    probe.values.reserve(t_grid.size());
    for (const double t : t_grid) {
        probe.values.push_back(v0 * std::exp(probe.exponent * t));
    }
    // Exactly-zero exponents land within roundoff of the threshold.
    const double tol =
        1e-14 * (std::fabs(spec.rho()) +
                 (spec.gamma() - 1.0) * (std::fabs(spec.r()) + std::fabs(alpha)));
    if (probe.exponent > tol) {
        probe.verdict = TransversalityVerdict::Diverges;
    } else if (probe.exponent < -tol) {
        probe.verdict = TransversalityVerdict::Vanishes;
    } else {
        probe.verdict = TransversalityVerdict::Constant;
    }
    return probe;
}

std::string digest_hex(const nlohmann::json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

nlohmann::json strategy_json(const ProportionalStrategy& s) {
    return nlohmann::json{{"kappa", s.kappa}, {"theta", s.theta}};
}

CheckRecord make_record(const ModelSpec& spec, const std::string& name,
                        bool pass, nlohmann::json details) {
    details["digest"] = digest_hex(
        nlohmann::json{{"spec", to_json(spec)}, {"check", name}});
    return CheckRecord{name, pass, std::move(details)};
}

} // namespace

BatteryReport run_battery(const ModelSpec& spec, const BatteryOptions& opts) {
    BatteryReport report;
    const ClosedFormSolution sol = solve_closed_form(spec);
    const ProportionalStrategy opt(sol.kappa_hat, sol.theta_hat);
    const double x = 1.0;

    // scalar constant versus the closed form
    {
        const double a_num = solve_scalar_constant(spec, 1e-12, 200);
        const double rel = std::fabs(a_num - sol.a) / sol.a;
        report.checks.push_back(make_record(
            spec, "scalar_constant", rel <= 1e-9,
            {{"a_closed_form", sol.a}, {"a_scalar", a_num}, {"rel_err", rel}}));
    }

    // HJB residual of the closed-form triple on a wide log grid, plus the
    // trivial solution v = 0 (which must also satisfy the equation exactly)
    {
        const std::vector<double> grid = log_spaced(1e-3, 1e3, 50);
        const double worst = residual_sweep(spec, grid, opts.debug_scale_a);
        const auto zero_res = hjb_residual(spec, 1.0, 0.0, 0.0, 0.0);
        const bool zero_ok = zero_res && *zero_res == 0.0;
        report.checks.push_back(make_record(
            spec, "residual_sweep", worst <= 1e-9 && zero_ok,
            {{"max_rel_residual", worst},
             {"zero_solution_residual", zero_res ? *zero_res : -1.0},
             {"scale_a", opts.debug_scale_a}}));
    }

    // homogeneity of the closed-form value
    {
        const HomogeneityCheck hc =
            homogeneity_check(spec, {0.5, 2.0, 10.0}, {0.3, 1.0, 7.0});
        report.checks.push_back(make_record(spec, "homogeneity", hc.pass,
                                            {{"max_rel_err", hc.max_rel_err}}));
    }

    // three-way agreement of the objective at the optimal strategy
    {
        const double v_ref = value(spec, x);
        const double j_prop = proportional_objective(spec, opt, x);
        const double rel = std::fabs(j_prop - v_ref) / std::fabs(v_ref);
        SimConfig cfg;
        cfg.horizon = default_horizon(spec, opt);
        cfg.steps = 4000;
        cfg.paths = opts.mc_paths;
        cfg.seed = opts.seed;
        const auto mc = mc_objective(spec, opt, x, cfg);
        bool pass = rel <= 1e-10 && mc.has_value();
        nlohmann::json details{{"value", v_ref},
                               {"proportional_objective", j_prop},
                               {"closed_form_rel_err", rel}};
        if (mc) {
            const double band = 3.0 * mc->std_error + mc->tail_bound;
            pass = pass && std::fabs(mc->estimate - v_ref) <= band;
            details["mc"] = to_json(*mc);
            details["ci_halfwidth"] = band;
        }
        report.checks.push_back(
            make_record(spec, "three_way_objective", pass, std::move(details)));
    }

    // budget constraint: random proportional strategies plus the optimal
    // strategy at a horizon long enough for the budget to bind
    {
        bool pass = true;
        nlohmann::json runs = nlohmann::json::array();
        CounterRng rng(opts.seed ^ 0x5eedb06e7ULL);
        for (int i = 0; i < 6; ++i) {
            const double u1 = rng.uniform(1000 + i, 1);
            const double u2 = rng.uniform(1000 + i, 2);
            const ProportionalStrategy strat(sol.kappa0 * (0.15 + 0.7 * u1),
                                             sol.theta_hat + 0.8 * (u2 - 0.5));
            SimConfig cfg;
            cfg.horizon = 20.0;
            cfg.steps = 800;
            cfg.paths = opts.mc_paths;
            cfg.seed = opts.seed + 17 * i;
            const BudgetCheck bc = budget_check(spec, strat, x, cfg);
            pass = pass && bc.pass;
            runs.push_back({{"strategy", strategy_json(strat)},
                            {"estimate", bc.integral.estimate},
                            {"std_error", bc.integral.std_error},
                            {"analytic", bc.analytic},
                            {"pass", bc.pass}});
        }
        SimConfig cfg;
        cfg.horizon = std::max(10.0, 7.0 / opt.kappa);
        cfg.steps = std::max(200, static_cast<int>(cfg.horizon / 0.25));
        cfg.paths = 10 * opts.mc_paths;
        cfg.seed = opts.seed ^ 0xb1d6e7ULL;
        const BudgetCheck bind = budget_check(spec, opt, x, cfg);
        const bool binds = std::fabs(bind.integral.estimate - x) <= 0.01 * x;
        pass = pass && bind.pass && binds;
        report.checks.push_back(make_record(
            spec, "budget", pass,
            {{"random_strategies", runs},
             {"optimal_estimate", bind.integral.estimate},
             {"optimal_horizon", cfg.horizon},
             {"optimal_binds_within_1pct", binds}}));
    }

    // martingale mean of M_t across the grid
    {
        SimConfig cfg;
        cfg.horizon = 10.0;
        cfg.steps = 400;
        cfg.paths = opts.mc_paths;
        cfg.seed = opts.seed ^ 0x3a17ULL;
        const MartingaleCheck mc = martingale_check(spec, opt, x, cfg);
        report.checks.push_back(make_record(
            spec, "martingale", mc.pass,
            {{"times_passed", mc.times_passed},
             {"times_total", mc.times_total},
             {"strategy", strategy_json(opt)}}));
    }

    // strategy sweep: closed-form argmax plus the MC dominance bound
    {
        const double dk_hi = sol.kappa0 - opt.kappa;
        const std::vector<double> kappa_grid{
            0.4 * opt.kappa, 0.7 * opt.kappa, opt.kappa,
            opt.kappa + 0.3 * dk_hi, opt.kappa + 0.6 * dk_hi};
        const std::vector<double> theta_grid{
            opt.theta - 0.1, opt.theta - 0.05, opt.theta, opt.theta + 0.05,
            opt.theta + 0.1};
        const StrategySweep sweep = strategy_grid_sweep(spec, x, kappa_grid, theta_grid);
        bool pass = sweep.argmax_is_optimal;
        const double v_ref = value(spec, x);
        bool mc_bound = true;
        std::uint64_t entry = 0;
        for (const SweepEntry& e : sweep.table) {
            SimConfig cfg;
            cfg.horizon = default_horizon(spec, ProportionalStrategy(e.kappa, e.theta));
            cfg.steps = std::min(8000, std::max(200, static_cast<int>(cfg.horizon / 0.2)));
            cfg.paths = opts.sweep_paths;
            cfg.seed = opts.seed ^ mix64(0x57eb + entry++);
            const auto mc = mc_objective(spec, {e.kappa, e.theta}, x, cfg);
            if (!mc) {
                mc_bound = false;
                break;
            }
            mc_bound = mc_bound && mc->estimate <=
                                       v_ref + 3.0 * mc->std_error + mc->tail_bound;
        }
        pass = pass && mc_bound;
        report.checks.push_back(make_record(
            spec, "strategy_sweep", pass,
            {{"argmax", strategy_json(sweep.argmax)},
             {"argmax_is_optimal", sweep.argmax_is_optimal},
             {"mc_dominance", mc_bound},
             {"grid_size", sweep.table.size()}}));
    }

    // transversality probe around the divergence threshold
    {
        const double alpha_star = spec.rho() / (spec.gamma() - 1.0) + spec.r();
        const std::vector<double> t_grid{0.0, 10.0, 50.0, 100.0};
        bool pass;
        nlohmann::json details;
        if (alpha_star > 0.0) {
            const auto above = transversality_probe(spec, 1.2 * alpha_star, t_grid);
            const auto at = transversality_probe(spec, alpha_star, t_grid);
            const auto below = transversality_probe(spec, 0.8 * alpha_star, t_grid);
            pass = above.verdict == TransversalityVerdict::Diverges &&
                   at.verdict == TransversalityVerdict::Constant &&
                   below.verdict == TransversalityVerdict::Vanishes;
            details = {{"alpha_star", alpha_star},
                       {"above", verdict_name(above.verdict)},
                       {"at", verdict_name(at.verdict)},
                       {"below", verdict_name(below.verdict)}};
        } else {
            // every positive consumption fraction exceeds the threshold
            const auto any = transversality_probe(spec, 1.0, t_grid);
            pass = any.verdict == TransversalityVerdict::Diverges;
            details = {{"alpha_star", alpha_star},
                       {"above", verdict_name(any.verdict)}};
        }
        report.checks.push_back(
            make_record(spec, "transversality", pass, std::move(details)));
    }

    // independent numerical recovery by policy iteration
    {
        Grid grid;
        grid.y_min = -3.0;
        grid.y_max = 3.0;
        grid.n_nodes = 400;
        const NumericSolution num = policy_iteration(spec, grid, 1e-10, 80);
        double max_rel = 0.0, max_frac = 0.0;
        for (std::size_t j = 0; j < num.x.size(); ++j) {
            const double ref = value(spec, num.x[j]);
            max_rel = std::max(max_rel, std::fabs(num.v[j] - ref) / std::fabs(ref));
            max_frac = std::max(max_frac,
                                std::fabs(num.c[j] / num.x[j] - opt.kappa));
            max_frac = std::max(max_frac,
                                std::fabs(num.pi[j] / num.x[j] - opt.theta));
        }
        const bool pass = num.converged && max_rel <= 1e-3 && max_frac <= 1e-3;
        report.checks.push_back(make_record(
            spec, "hjb_policy_iteration", pass,
            {{"max_rel_err", max_rel},
             {"max_fraction_err", max_frac},
             {"iterations", num.iterations},
             {"final_residual", num.final_residual},
             {"converged", num.converged}}));
    }

    report.all_pass = true;
    for (const CheckRecord& c : report.checks) {
        report.all_pass = report.all_pass && c.pass;
    }

    nlohmann::json checks = nlohmann::json::array();
    for (const CheckRecord& c : report.checks) {
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"details", c.details}});
    }
    report.report = nlohmann::json{{"spec", to_json(spec)},
                                   {"digest", digest_hex(to_json(spec))},
                                   {"seed", opts.seed},
                                   {"mc_paths", opts.mc_paths},
                                   {"sweep_paths", opts.sweep_paths},
                                   {"debug_scale_a", opts.debug_scale_a},
                                   {"checks", checks},
                                   {"all_pass", report.all_pass}};
    return report;
}

} // namespace merton
