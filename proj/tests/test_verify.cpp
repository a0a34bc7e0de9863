#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "merton/verify.hpp"
#include "test_specs.hpp"

using merton::ModelSpec;
using merton::ProportionalStrategy;
using merton::SimConfig;

namespace {

SimConfig make_cfg(double horizon, int steps, int paths, std::uint64_t seed) {
    SimConfig cfg;
    cfg.horizon = horizon;
    cfg.steps = steps;
    cfg.paths = paths;
    cfg.seed = seed;
    return cfg;
}

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) {
        g[i] = std::exp(std::log(lo) + i * (std::log(hi) - std::log(lo)) / (n - 1));
    }
    return g;
}

} // namespace

TEST_SUITE_BEGIN("verify");

TEST_CASE("default horizon rule") {
    const ModelSpec b = testutil::spec_b();
    CHECK(merton::default_horizon(b, {0.03, 0.4}) == doctest::Approx(400.0).epsilon(1e-9));
    const ModelSpec a = testutil::spec_a();
    CHECK(merton::default_horizon(a, {0.5, 0.0}) == doctest::Approx(24.0).epsilon(1e-12));
    CHECK_THROWS_AS(merton::default_horizon(b, {0.08, 0.4}), std::invalid_argument);
}

TEST_CASE("mc objective on the deterministic set A optimum") {
    const ModelSpec a = testutil::spec_a();
    const auto mc = merton::mc_objective(a, {0.5, 0.0}, 1.0, make_cfg(20.0, 2000, 16, 1));
    REQUIRE(mc.has_value());
    CHECK(mc->std_error <= 1e-14); // all paths identical
    // tail bound 2 e^{-10} / 0.5
    CHECK(mc->tail_bound == doctest::Approx(4.0 * std::exp(-10.0)).epsilon(1e-10));
    CHECK(std::fabs(mc->estimate - (-4.0)) <= 3.0 * mc->std_error + mc->tail_bound);
}

TEST_CASE("mc objective brackets the closed form, set B optimum") {
    const ModelSpec b = testutil::spec_b();
    const auto mc = merton::mc_objective(b, {0.03, 0.4}, 1.0, make_cfg(200.0, 2000, 10000, 2));
    REQUIRE(mc.has_value());
    const double band = 3.0 * mc->std_error + mc->tail_bound;
    CHECK(std::fabs(mc->estimate - (-1.0 / 0.0009)) <= band);
    CHECK(mc->std_error > 0.0);
}

TEST_CASE("mc objective flags the divergent cone") {
    const ModelSpec b = testutil::spec_b();
    CHECK_FALSE(merton::mc_objective(b, {0.08, 0.4}, 1.0, make_cfg(10.0, 100, 10, 1)).has_value());
    CHECK_THROWS_AS(merton::mc_objective(b, {0.0, 0.4}, 1.0, make_cfg(10.0, 100, 10, 1)),
                    std::invalid_argument);
}

TEST_CASE("budget check") {
    const ModelSpec b = testutil::spec_b();

    // zero consumption: estimate is exactly zero and the bound is slack
    const merton::BudgetCheck none =
        merton::budget_check(b, {0.0, 0.3}, 1.0, make_cfg(5.0, 100, 200, 3));
    CHECK(none.integral.estimate == 0.0);
    CHECK(none.analytic == 0.0);
    CHECK(none.pass);

    // short horizon: CI contains x (1 - e^{-kappa})
    const merton::BudgetCheck short_t =
        merton::budget_check(b, {0.04, 0.1}, 1.0, make_cfg(1.0, 200, 20000, 4));
    CHECK(short_t.analytic == doctest::Approx(1.0 - std::exp(-0.04)).epsilon(1e-12));
    CHECK(short_t.matches_analytic);
    CHECK(short_t.pass);

    // long horizon at the optimum: the budget binds
    const merton::BudgetCheck bind =
        merton::budget_check(b, {0.03, 0.4}, 1.0, make_cfg(300.0, 1500, 40000, 5));
    CHECK(bind.pass);
    CHECK(std::fabs(bind.integral.estimate - 1.0) <= 0.01);
}

TEST_CASE("martingale check") {
    // deterministic: every grid time matches exactly up to quadrature
    const ModelSpec flat({0.02, 0.02, 0.3}, {0.5, 2.0});
    const merton::MartingaleCheck det =
        merton::martingale_check(flat, {0.5, 0.0}, 1.0, make_cfg(5.0, 200, 8, 6));
    CHECK(det.times_passed == det.times_total);
    CHECK(det.pass);

    // mean-one exponential deflator
    const ModelSpec zero_r({0.0, 0.05, 0.25}, {1.0, 2.0});
    const merton::MartingaleCheck defl =
        merton::martingale_check(zero_r, {0.0, 0.0}, 1.0, make_cfg(2.0, 100, 8000, 7));
    CHECK(defl.pass);

    // set B optimal
    const merton::MartingaleCheck opt = merton::martingale_check(
        testutil::spec_b(), {0.03, 0.4}, 1.0, make_cfg(5.0, 200, 8000, 1));
    CHECK(opt.pass);
    CHECK(opt.times_passed >= static_cast<int>(0.95 * opt.times_total));
}

TEST_CASE("homogeneity check") {
    for (const ModelSpec& spec : {testutil::spec_a(), testutil::spec_b()}) {
        const merton::HomogeneityCheck hc =
            merton::homogeneity_check(spec, {1.0, 0.5, 2.0, 10.0}, {0.3, 1.0, 7.0});
        CHECK(hc.pass);
        CHECK(hc.max_rel_err <= 1e-12);
    }
}

TEST_CASE("residual sweep") {
    const std::vector<double> grid = log_grid(1e-3, 1e3, 50);
    CHECK(merton::residual_sweep(testutil::spec_a(), grid) <= 1e-9);
    CHECK(merton::residual_sweep(testutil::spec_b(), grid) <= 1e-9);
    // a corrupted constant must be detected
    CHECK(merton::residual_sweep(testutil::spec_a(), grid, 1.1) > 1e-6);
    CHECK(merton::residual_sweep(testutil::spec_b(), grid, 0.9) > 1e-6);
}

TEST_CASE("strategy grid sweep") {
    // the grids from the worked set A example
    std::vector<double> kappa_grid;
    for (int i = 1; i <= 9; ++i) kappa_grid.push_back(0.1 * i);
    kappa_grid.push_back(0.5);
    const std::vector<double> theta_grid{-0.2, 0.0, 0.2};
    const merton::StrategySweep a =
        merton::strategy_grid_sweep(testutil::spec_a(), 1.0, kappa_grid, theta_grid);
    CHECK(a.argmax.kappa == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a.argmax.theta == 0.0);
    CHECK(a.argmax_is_optimal);
    CHECK(a.table.size() == kappa_grid.size() * theta_grid.size());

    const std::vector<double> kb{0.02, 0.025, 0.03, 0.035, 0.04};
    const std::vector<double> tb{0.2, 0.3, 0.4, 0.5, 0.6};
    const merton::StrategySweep b =
        merton::strategy_grid_sweep(testutil::spec_b(), 1.0, kb, tb);
    CHECK(b.argmax.kappa == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(b.argmax.theta == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(b.argmax_is_optimal);

    // refining the grid keeps the argmax on the optimal pair
    const std::vector<double> kb2{0.02, 0.0225, 0.025, 0.0275, 0.03, 0.0325, 0.035};
    const std::vector<double> tb2{0.3, 0.35, 0.4, 0.45, 0.5};
    const merton::StrategySweep b2 =
        merton::strategy_grid_sweep(testutil::spec_b(), 1.0, kb2, tb2);
    CHECK(b2.argmax.kappa == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(b2.argmax.theta == doctest::Approx(0.4).epsilon(1e-12));

    // grid must contain the optimum and stay inside (0, kappa_0)
    CHECK_THROWS_AS(merton::strategy_grid_sweep(testutil::spec_b(), 1.0, {0.02, 0.04}, tb),
                    std::invalid_argument);
    CHECK_THROWS_AS(merton::strategy_grid_sweep(testutil::spec_b(), 1.0,
                                                {0.03, 0.0601}, tb),
                    std::invalid_argument);
    CHECK_THROWS_AS(merton::strategy_grid_sweep(testutil::spec_b(), 1.0, kb,
                                                {0.2, 0.6}),
                    std::invalid_argument);
}

TEST_CASE("transversality probe") {
    const ModelSpec b = testutil::spec_b();
    const std::vector<double> t_grid{0.0, 1.0, 10.0, 100.0};
    const auto diverges = merton::transversality_probe(b, 0.06, t_grid);
    CHECK(diverges.verdict == merton::TransversalityVerdict::Diverges);
    const auto vanishes = merton::transversality_probe(b, 0.04, t_grid);
    CHECK(vanishes.verdict == merton::TransversalityVerdict::Vanishes);
    const auto constant = merton::transversality_probe(b, 0.05, t_grid);
    CHECK(constant.verdict == merton::TransversalityVerdict::Constant);

    // table tracks V(x) e^{xi t}
    const double v0 = merton::value(b, 1.0);
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        CHECK(diverges.values[i] ==
              doctest::Approx(v0 * std::exp(0.01 * t_grid[i])).epsilon(1e-9));
    }
    CHECK(diverges.values.back() < v0);  // drifts toward -inf
    CHECK(vanishes.values.back() > v0);  // decays toward zero

    // the flip is sharp around the threshold
    CHECK(merton::transversality_probe(b, 0.05 + 1e-6, t_grid).verdict ==
          merton::TransversalityVerdict::Diverges);
    CHECK(merton::transversality_probe(b, 0.05 - 1e-6, t_grid).verdict ==
          merton::TransversalityVerdict::Vanishes);
}

TEST_CASE("digest is stable") {
    const nlohmann::json j{{"a", 1.0}, {"b", "x"}};
    CHECK(merton::digest_hex(j) == merton::digest_hex(j));
    CHECK(merton::digest_hex(j) != merton::digest_hex(nlohmann::json{{"a", 2.0}}));
    CHECK(merton::digest_hex(j).size() == 16);
}

TEST_CASE("battery passes on both canonical sets") {
    merton::BatteryOptions opts;
    opts.seed = 1;
    opts.mc_paths = 2000;
    opts.sweep_paths = 400;
    for (const ModelSpec& spec : {testutil::spec_a(), testutil::spec_b()}) {
        const merton::BatteryReport report = merton::run_battery(spec, opts);
        for (const merton::CheckRecord& check : report.checks) {
            INFO(check.name, ": ", check.details.dump());
            CHECK(check.pass);
        }
        CHECK(report.all_pass);
        CHECK(report.report.at("checks").size() == report.checks.size());
    }
}

TEST_CASE("battery flags a corrupted constant") {
    merton::BatteryOptions opts;
    opts.seed = 1;
    opts.mc_paths = 500;
    opts.sweep_paths = 100;
    opts.debug_scale_a = 1.1;
    const merton::BatteryReport report = merton::run_battery(testutil::spec_a(), opts);
    CHECK_FALSE(report.all_pass);
    bool residual_failed = false;
    for (const merton::CheckRecord& check : report.checks) {
        if (check.name == "residual_sweep") residual_failed = !check.pass;
    }
    CHECK(residual_failed);
}

TEST_SUITE_END();
