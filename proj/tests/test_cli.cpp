#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
    const char* p = std::getenv("MERTON_CLI");
    return p ? p : "";
}

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    RunResult result;
    if (!pipe) return result;
    char buf[4096];
    while (std::fgets(buf, sizeof(buf), pipe)) {
        result.output += buf;
    }
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "merton_cli_test";
    fs::create_directories(dir);
    return dir;
}

fs::path write_model(const std::string& name, const std::string& body) {
    const fs::path path = work_dir() / name;
    std::ofstream out(path);
    out << body;
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("solve reports the closed form") {
    REQUIRE_FALSE(cli_path().empty());
    const fs::path model =
        write_model("a.json", R"({"r":0.0,"mu":0.0,"sigma":0.2,"rho":1.0,"gamma":2.0})");
    const RunResult r = run("solve --model " + model.string());
    REQUIRE(r.exit_code == 0);
    const nlohmann::json j = nlohmann::json::parse(r.output);
    CHECK(j.at("a").get<double>() == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(j.at("kappa_hat").get<double>() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(j.at("theta_hat").get<double>() == 0.0);

    const RunResult csv = run("solve --format csv --model " + model.string());
    CHECK(csv.exit_code == 0);
    CHECK(csv.output.rfind("a,kappa_hat", 0) == 0);
}

TEST_CASE("solve rejects an ill-posed model with exit code 2") {
    const fs::path model = write_model(
        "bad.json", R"({"r":-0.1,"mu":-0.1,"sigma":1.0,"rho":-0.2,"gamma":2.0})");
    CHECK(run("solve --model " + model.string()).exit_code == 2);
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(run("solve --model /nonexistent/file.json").exit_code == 2);
    CHECK(run("frobnicate").exit_code == 2);
    CHECK(run("solve").exit_code == 2);
    CHECK(run("solve --model x --format yaml").exit_code == 2);
}

TEST_CASE("simulate writes a deterministic path for set A") {
    const fs::path model =
        write_model("a.json", R"({"r":0.0,"mu":0.0,"sigma":0.2,"rho":1.0,"gamma":2.0})");
    const RunResult r = run("simulate --model " + model.string() +
                            " --optimal --horizon 1 --steps 100 --paths 1 --seed 3");
    REQUIRE(r.exit_code == 0);
    // last CSV row carries X(1) = e^{-0.5}
    std::istringstream lines(r.output);
    std::string line, last;
    std::getline(lines, line); // header
    while (std::getline(lines, line)) {
        if (!line.empty()) last = line;
    }
    double path_id, t, x, c, y;
    REQUIRE(std::sscanf(last.c_str(), "%lf,%lf,%lf,%lf,%lf", &path_id, &t, &x, &c, &y) == 5);
    CHECK(t == doctest::Approx(1.0));
    CHECK(x == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

    // same seed twice produces byte-identical exports
    const fs::path d1 = work_dir() / "sim1";
    const fs::path d2 = work_dir() / "sim2";
    REQUIRE(run("simulate --model " + model.string() +
                " --kappa 0.4 --theta 0.3 --paths 5 --steps 50 --seed 11 --out " +
                d1.string()).exit_code == 0);
    REQUIRE(run("simulate --model " + model.string() +
                " --kappa 0.4 --theta 0.3 --paths 5 --steps 50 --seed 11 --out " +
                d2.string()).exit_code == 0);
    CHECK(slurp(d1 / "paths.csv") == slurp(d2 / "paths.csv"));
    CHECK_FALSE(slurp(d1 / "paths.csv").empty());

    // invalid strategy and initial wealth are configuration errors
    CHECK(run("simulate --model " + model.string() + " --kappa -0.5").exit_code == 2);
    CHECK(run("simulate --model " + model.string() + " --kappa 0.5 --x0 0").exit_code == 2);
}

TEST_CASE("evaluate reports the MC objective with its closed form") {
    const fs::path model =
        write_model("a.json", R"({"r":0.0,"mu":0.0,"sigma":0.2,"rho":1.0,"gamma":2.0})");
    const RunResult r = run("evaluate --model " + model.string() +
                            " --kappa 0.5 --theta 0 --paths 64 --steps 2400 --seed 9");
    REQUIRE(r.exit_code == 0);
    const nlohmann::json j = nlohmann::json::parse(r.output);
    CHECK_FALSE(j.at("divergent").get<bool>());
    CHECK(j.at("closed_form").get<double>() == doctest::Approx(-4.0).epsilon(1e-10));
    const double estimate = j.at("mc").at("estimate").get<double>();
    const double band = 3.0 * j.at("mc").at("std_error").get<double>() +
                        j.at("mc").at("tail_bound").get<double>();
    CHECK(std::fabs(estimate - (-4.0)) <= band + 1e-9);
}

TEST_CASE("hjb subcommand writes the node table") {
    const fs::path model = write_model(
        "b.json", R"({"r":0.02,"mu":0.07,"sigma":0.25,"rho":0.03,"gamma":2.0})");
    const fs::path out = work_dir() / "hjb_out";
    const RunResult r = run("hjb --model " + model.string() + " --nodes 100 --out " +
                            out.string());
    REQUIRE(r.exit_code == 0);
    const std::string csv = slurp(out / "hjb_nodes.csv");
    CHECK(csv.rfind("x,v_num", 0) == 0);
    const nlohmann::json summary = nlohmann::json::parse(slurp(out / "hjb_summary.json"));
    CHECK(summary.at("converged").get<bool>());
    CHECK(summary.at("max_rel_err_vs_closed_form").get<double>() <= 1e-3);
}

TEST_SUITE_END();
