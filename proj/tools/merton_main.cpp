#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "merton/closed_form.hpp"
#include "merton/hjb_numeric.hpp"
#include "merton/model.hpp"
#include "merton/sde.hpp"
#include "merton/verify.hpp"

namespace {

using merton::ModelSpec;

ModelSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open model file: " + path);
    }
    nlohmann::json j;
    in >> j;
    return merton::spec_from_json(j);
}

// Write-then-rename so partially written outputs are never observed.
void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

std::filesystem::path ensure_out_dir(const std::string& out) {
    std::filesystem::path dir(out);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string csv_row(const std::vector<double>& values) {
    std::ostringstream os;
    char buf[32];
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
        os << (i ? "," : "") << buf;
    }
    os << "\n";
    return os.str();
}

int cmd_solve(const std::string& model_path, const std::string& out,
              const std::string& format) {
    const ModelSpec spec = load_spec(model_path);
    if (!spec.is_well_posed()) {
        std::cerr << "ill-posed model: margin = " << spec.margin()
                  << " (must be > 0)\n";
        return 2;
    }
    const merton::ClosedFormSolution sol = merton::solve_closed_form(spec);
    std::string text;
    if (format == "csv") {
        text = "a,kappa_hat,theta_hat,drift_opt,vol_opt,kappa0,margin\n" +
               csv_row({sol.a, sol.kappa_hat, sol.theta_hat, sol.drift_opt,
                        sol.vol_opt, sol.kappa0, sol.margin});
    } else {
        text = merton::to_json(sol).dump(2) + "\n";
    }
    if (out.empty()) {
        std::cout << text;
    } else {
        const auto dir = ensure_out_dir(out);
        write_atomic(dir / (format == "csv" ? "solve.csv" : "solve.json"), text);
        std::cout << "wrote " << (dir / (format == "csv" ? "solve.csv" : "solve.json")).string()
                  << "\n";
    }
    return 0;
}

struct SimulateArgs {
    double kappa = 0.0;
    double theta = 0.0;
    bool optimal = false;
    bool exact_optimal = false;
    double x0 = 1.0;
    double horizon = 1.0;
    int steps = 100;
    int paths = 1;
    std::string scheme = "exact-log";
    std::uint64_t seed = 0;
};

int cmd_simulate(const std::string& model_path, const std::string& out,
                 const SimulateArgs& args) {
    const ModelSpec spec = load_spec(model_path);
    merton::SimConfig cfg;
    cfg.horizon = args.horizon;
    cfg.steps = args.steps;
    cfg.paths = args.paths;
    cfg.seed = args.seed;
    cfg.scheme = merton::scheme_from_name(args.scheme);

    merton::PathBundle bundle;
    if (args.exact_optimal) {
        bundle = merton::optimal_path_exact(spec, args.x0, cfg);
    } else if (args.optimal) {
        bundle = merton::simulate(spec, merton::optimal_strategy(spec), args.x0, cfg);
    } else {
        bundle = merton::simulate(
            spec, merton::ProportionalStrategy(args.kappa, args.theta), args.x0, cfg);
    }

    std::ostringstream csv;
    bundle.write_csv(csv);
    const std::string summary = bundle.summary_json().dump(2) + "\n";
    if (out.empty()) {
        std::cout << csv.str();
        std::cerr << summary;
    } else {
        const auto dir = ensure_out_dir(out);
        write_atomic(dir / "paths.csv", csv.str());
        write_atomic(dir / "summary.json", summary);
        std::cout << "wrote " << (dir / "paths.csv").string() << " (seed "
                  << args.seed << ")\n";
    }
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& out,
                 double kappa, double theta, double x0, double horizon,
                 int steps, int paths, std::uint64_t seed) {
    const ModelSpec spec = load_spec(model_path);
    const merton::ProportionalStrategy strat(kappa, theta);
    merton::SimConfig cfg;
    cfg.horizon = horizon > 0.0 ? horizon : merton::default_horizon(spec, strat);
    cfg.steps = steps > 0 ? steps : std::max(400, static_cast<int>(cfg.horizon / 0.1));
    cfg.paths = paths;
    cfg.seed = seed;

    nlohmann::json result{{"strategy", {{"kappa", kappa}, {"theta", theta}}},
                          {"x0", x0}};
    const auto mc = merton::mc_objective(spec, strat, x0, cfg);
    if (!mc) {
        result["divergent"] = true;
    } else {
        result["divergent"] = false;
        result["mc"] = merton::to_json(*mc);
        result["closed_form"] = merton::proportional_objective(spec, strat, x0);
        if (spec.is_well_posed()) {
            result["value"] = merton::value(spec, x0);
        }
    }
    const std::string text = result.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        const auto dir = ensure_out_dir(out);
        write_atomic(dir / "evaluate.json", text);
        std::cout << "wrote " << (dir / "evaluate.json").string() << "\n";
    }
    return 0;
}

int cmd_verify(const std::string& model_path, const std::string& out,
               std::uint64_t seed, int mc_paths, int sweep_paths,
               double debug_scale_a) {
    const ModelSpec spec = load_spec(model_path);
    merton::BatteryOptions opts;
    opts.seed = seed;
    opts.mc_paths = mc_paths;
    opts.sweep_paths = sweep_paths;
    opts.debug_scale_a = debug_scale_a;
    const merton::BatteryReport report = merton::run_battery(spec, opts);
    for (const merton::CheckRecord& check : report.checks) {
        std::cout << (check.pass ? "PASS " : "FAIL ") << check.name << "\n";
    }
    std::cout << (report.all_pass ? "all checks passed" : "some checks FAILED")
              << "\n";
    if (!out.empty()) {
        const auto dir = ensure_out_dir(out);
        write_atomic(dir / "report.json", report.report.dump(2) + "\n");
    }
    return report.all_pass ? 0 : 1;
}

int cmd_hjb(const std::string& model_path, const std::string& out, double y_min,
            double y_max, int nodes, double tol, int max_iter) {
    const ModelSpec spec = load_spec(model_path);
    merton::Grid grid;
    grid.y_min = y_min;
    grid.y_max = y_max;
    grid.n_nodes = nodes;
    const merton::NumericSolution sol = merton::policy_iteration(spec, grid, tol, max_iter);
    double max_rel = 0.0;
    for (std::size_t j = 0; j < sol.x.size(); ++j) {
        const double ref = merton::value(spec, sol.x[j]);
        max_rel = std::max(max_rel, std::fabs(sol.v[j] - ref) / std::fabs(ref));
    }
    const nlohmann::json summary{{"iterations", sol.iterations},
                                 {"converged", sol.converged},
                                 {"final_residual", sol.final_residual},
                                 {"max_rel_err_vs_closed_form", max_rel},
                                 {"boundary_mode", sol.boundary_mode},
                                 {"nodes", nodes}};
    std::ostringstream csv;
    merton::write_node_table_csv(csv, spec, sol);
    if (out.empty()) {
        std::cout << summary.dump(2) << "\n";
    } else {
        const auto dir = ensure_out_dir(out);
        write_atomic(dir / "hjb_nodes.csv", csv.str());
        write_atomic(dir / "hjb_summary.json", summary.dump(2) + "\n");
        std::cout << "wrote " << (dir / "hjb_nodes.csv").string() << "\n";
    }
    return 0;
}

int cmd_report(const std::string& model_path, const std::string& out) {
    const ModelSpec spec = load_spec(model_path);
    const auto dir = ensure_out_dir(out);
    const merton::ClosedFormSolution sol = merton::solve_closed_form(spec);

    // value function curve on a log grid
    {
        std::ostringstream csv;
        csv << "x,value,value_d1,value_d2\n";
        for (int i = 0; i < 200; ++i) {
            const double x = std::exp(std::log(1e-3) + i * (std::log(1e3) - std::log(1e-3)) / 199);
            csv << csv_row({x, merton::value(spec, x), merton::value_d1(spec, x),
                            merton::value_d2(spec, x)});
        }
        write_atomic(dir / "value_curve.csv", csv.str());
    }
    // HJB residual of the closed-form triple
    {
        std::ostringstream csv;
        csv << "x,rel_residual\n";
        for (int i = 0; i < 50; ++i) {
            const double x = std::exp(std::log(1e-3) + i * (std::log(1e3) - std::log(1e-3)) / 49);
            csv << csv_row({x, merton::residual_sweep(spec, {x})});
        }
        write_atomic(dir / "residual_sweep.csv", csv.str());
    }
    // closed-form objective surface over a strategy grid
    {
        const double dk = sol.kappa0 - sol.kappa_hat;
        std::vector<double> kappa_grid, theta_grid;
        for (int i = 0; i < 9; ++i) {
            kappa_grid.push_back(0.2 * sol.kappa_hat +
                                 i * (sol.kappa_hat + 0.8 * dk - 0.2 * sol.kappa_hat) / 8);
            theta_grid.push_back(sol.theta_hat - 0.2 + i * 0.05);
        }
        kappa_grid[4] = sol.kappa_hat; // keep the optimum on the grid
        theta_grid[4] = sol.theta_hat;
        const merton::StrategySweep sweep =
            merton::strategy_grid_sweep(spec, 1.0, kappa_grid, theta_grid);
        std::ostringstream csv;
        csv << "kappa,theta,objective\n";
        for (const merton::SweepEntry& e : sweep.table) {
            csv << csv_row({e.kappa, e.theta, e.objective});
        }
        write_atomic(dir / "strategy_sweep.csv", csv.str());
    }
    // discounted value along the aggressive-consumption path
    {
        const double alpha_star = spec.rho() / (spec.gamma() - 1.0) + spec.r();
        std::vector<double> t_grid;
        for (int i = 0; i <= 100; ++i) t_grid.push_back(i);
        std::ostringstream csv;
        csv << "alpha,t,discounted_value\n";
        for (const double alpha :
             {0.8 * alpha_star, alpha_star, 1.2 * alpha_star}) {
            if (!(alpha > 0.0)) continue;
            const auto probe = merton::transversality_probe(spec, alpha, t_grid);
            for (std::size_t i = 0; i < t_grid.size(); ++i) {
                csv << csv_row({alpha, probe.times[i], probe.values[i]});
            }
        }
        write_atomic(dir / "transversality.csv", csv.str());
    }
    std::cout << "wrote report tables to " << dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Merton consumption-investment solver and verification lab"};
    app.require_subcommand(1);

    std::string model_path, out, format = "json";
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub, bool model_required = true) {
        auto* opt = sub->add_option("--model", model_path, "model JSON file");
        if (model_required) opt->required();
        sub->add_option("--out", out, "output directory");
        sub->add_option("--seed", seed, "RNG seed");
        sub->add_option("--format", format, "output format (json|csv)")
            ->check(CLI::IsMember({"json", "csv"}));
    };

    CLI::App* solve = app.add_subcommand("solve", "closed-form solution");
    add_common(solve);

    CLI::App* simulate = app.add_subcommand("simulate", "simulate wealth paths");
    add_common(simulate);
    SimulateArgs sim_args;
    simulate->add_option("--kappa", sim_args.kappa, "consumption fraction");
    simulate->add_option("--theta", sim_args.theta, "risky wealth fraction");
    simulate->add_flag("--optimal", sim_args.optimal, "use the optimal strategy");
    simulate->add_flag("--exact-optimal", sim_args.exact_optimal,
                       "sample the optimal wealth law directly");
    simulate->add_option("--x0", sim_args.x0, "initial wealth");
    simulate->add_option("--horizon", sim_args.horizon, "time horizon");
    simulate->add_option("--steps", sim_args.steps, "grid steps");
    simulate->add_option("--paths", sim_args.paths, "number of paths");
    simulate->add_option("--scheme", sim_args.scheme, "exact-log or euler")
        ->check(CLI::IsMember({"exact-log", "euler"}));

    CLI::App* evaluate = app.add_subcommand("evaluate", "Monte-Carlo objective");
    add_common(evaluate);
    double ev_kappa = 0.0, ev_theta = 0.0, ev_x0 = 1.0, ev_horizon = 0.0;
    int ev_steps = 0, ev_paths = 10000;
    evaluate->add_option("--kappa", ev_kappa, "consumption fraction")->required();
    evaluate->add_option("--theta", ev_theta, "risky wealth fraction");
    evaluate->add_option("--x0", ev_x0, "initial wealth");
    evaluate->add_option("--horizon", ev_horizon, "truncation horizon (default rule)");
    evaluate->add_option("--steps", ev_steps, "grid steps");
    evaluate->add_option("--paths", ev_paths, "number of paths");

    CLI::App* verify = app.add_subcommand("verify", "run the full claim battery");
    add_common(verify);
    int mc_paths = 10000, sweep_paths = 1000;
    double debug_scale_a = 1.0;
    verify->add_option("--paths", mc_paths, "paths per MC check");
    verify->add_option("--sweep-paths", sweep_paths, "paths per sweep strategy");
    verify->add_option("--debug-scale-a", debug_scale_a,
                       "perturb the residual-sweep constant (testing aid)");

    CLI::App* hjb = app.add_subcommand("hjb", "policy-iteration HJB solve");
    add_common(hjb);
    double y_min = -3.0, y_max = 3.0, hjb_tol = 1e-10;
    int nodes = 400, hjb_max_iter = 80;
    hjb->add_option("--ymin", y_min, "lower log-wealth bound");
    hjb->add_option("--ymax", y_max, "upper log-wealth bound");
    hjb->add_option("--nodes", nodes, "interior nodes");
    hjb->add_option("--tol", hjb_tol, "policy-change tolerance");
    hjb->add_option("--max-iter", hjb_max_iter, "iteration cap");

    CLI::App* report = app.add_subcommand("report", "plot-ready CSV tables");
    add_common(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (solve->parsed()) return cmd_solve(model_path, out, format);
        if (simulate->parsed()) {
            sim_args.seed = seed;
            return cmd_simulate(model_path, out, sim_args);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(model_path, out, ev_kappa, ev_theta, ev_x0,
                                ev_horizon, ev_steps, ev_paths, seed);
        }
        if (verify->parsed()) {
            return cmd_verify(model_path, out, seed, mc_paths, sweep_paths,
                              debug_scale_a);
        }
        if (hjb->parsed()) {
            return cmd_hjb(model_path, out, y_min, y_max, nodes, hjb_tol,
                           hjb_max_iter);
        }
        if (report->parsed()) {
            if (out.empty()) {
                std::cerr << "report requires --out\n";
                return 2;
            }
            return cmd_report(model_path, out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
