#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "support/synthetic_cdr.hpp"

namespace {

struct RunResult {
    int exit_code;
    std::string out;
};

// Runs the CLI through the shell; stderr is folded into stdout.
RunResult run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + std::string(MFLR_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof(buf), pipe)) out.append(buf, n);
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

std::string temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "mflr_cli_tests";
    std::filesystem::create_directories(dir);
    return dir.string();
}

std::string write_config(const std::string& name, const nlohmann::json& j) {
    const std::string path = temp_dir() + "/" + name;
    std::ofstream out(path);
    out << j.dump(2);
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("allocate reproduces the published exp table") {
    const std::string cfg = write_config(
        "alloc_exp.json",
        {{"stats", {{"mode", "exact"}, {"family", "exp"}}},
         {"costs", {1.0, 0.001}},
         {"budgets", {10, 100, 1000}}});
    const RunResult r = run_cli("allocate -c " + cfg);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("10,8,1126,") != std::string::npos);
    CHECK(r.out.find("100,88,11263,") != std::string::npos);
    CHECK(r.out.find("1000,887,112631,") != std::string::npos);
}

TEST_CASE("allocate rejects an unaffordable budget with a numeric exit code") {
    const std::string cfg = write_config(
        "alloc_small.json", {{"stats", {{"mode", "exact"}, {"family", "exp"}}},
                             {"costs", {1.0, 0.001}},
                             {"budgets", {0.5}}});
    const RunResult r = run_cli("allocate -c " + cfg);
    CHECK(r.exit_code == 3);
    CHECK(r.out.find("budget too small") != std::string::npos);
    CHECK(nlohmann::json::parse(r.out).contains("error"));
}

TEST_CASE("schema violations are rejected before compute and name the key") {
    const std::string cfg = write_config(
        "alloc_bad.json", {{"stats", {{"mode", "exact"}, {"family", "exp"}}},
                           {"costs", {1.0, 0.001}},
                           {"budgets", {10}},
                           {"bananas", 1}});
    const RunResult r = run_cli("allocate -c " + cfg);
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("bananas") != std::string::npos);
}

TEST_CASE("a stats file missing rho is a schema error before compute") {
    const std::string stats_path = temp_dir() + "/broken_stats.json";
    {
        std::ofstream out(stats_path);
        out << R"({"K":2,"sigma":[1.0,1.0],"provenance":"x","C1k":null,"Ckk":null})";
    }
    const std::string cfg = write_config("alloc_broken_stats.json",
                                         {{"stats", stats_path},
                                          {"costs", {1.0, 0.001}},
                                          {"budgets", {10}}});
    const RunResult r = run_cli("allocate -c " + cfg);
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("rho") != std::string::npos);
}

TEST_CASE("stats subcommand: exact mode and pilot determinism") {
    const std::string cfg = write_config("stats_exact.json",
                                         {{"mode", "exact"}, {"family", "exp"}});
    const RunResult r = run_cli("stats -c " + cfg);
    CHECK(r.exit_code == 0);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(j.at("K") == 2);
    CHECK(std::abs(j.at("rho")[1].get<double>() - 0.9703) < 1e-3);

    const std::string pilot_cfg = write_config(
        "stats_pilot.json",
        {{"mode", "pilot"}, {"family", "exp"}, {"n_pilot", 10}, {"seed", 77}});
    const RunResult p1 = run_cli("stats -c " + pilot_cfg);
    const RunResult p2 = run_cli("stats -c " + pilot_cfg);
    CHECK(p1.exit_code == 0);
    CHECK(p1.out == p2.out);
}

TEST_CASE("stats subcommand reads the reference dataset within 1% of the table") {
    const std::string data = temp_dir() + "/cdr_ref.csv";
    testsupport::write_synthetic_cdr_dataset(data);
    const std::string cfg =
        write_config("stats_ds.json", {{"mode", "dataset"}, {"dataset", data}});
    const RunResult r = run_cli("stats -c " + cfg);
    CHECK(r.exit_code == 0);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(std::abs(j.at("sigma")[0].get<double>() - 276.1) <= 0.01 * 276.1);
    CHECK(std::abs(j.at("rho")[1].get<double>() - 0.95) <= 0.01 * 0.95);
}

TEST_CASE("fit: single-fidelity on eight samples yields a length-3 beta") {
    const std::string cfg = write_config("fit_sf.json", {{"family", "exp"},
                                                         {"strategy", "single-fidelity"},
                                                         {"budget", 8},
                                                         {"seed", 11}});
    const RunResult r = run_cli("fit -c " + cfg);
    CHECK(r.exit_code == 0);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(j.at("beta").size() == 3);
    CHECK(j.at("m")[0] == 8);
    CHECK(j.at("strategy") == "single-fidelity");
}

TEST_CASE("fit: mf-a-star refuses a two-sample pilot (singular C_kk)") {
    const std::string cfg = write_config(
        "fit_astar.json",
        {{"family", "exp"},
         {"strategy", "mf-a-star"},
         {"stats", {{"mode", "pilot"}, {"family", "exp"}, {"n_pilot", 2}, {"seed", 5}}},
         {"budget", 100}});
    const RunResult r = run_cli("fit -c " + cfg);
    CHECK(r.exit_code == 3);
    CHECK(r.out.find("positive definite") != std::string::npos);
}

TEST_CASE("experiment smoke config completes quickly and reproducibly") {
    const std::string out1 = temp_dir() + "/smoke1";
    const std::string out2 = temp_dir() + "/smoke2";
    const std::string cfg = write_config("smoke.json",
                                         {{"family", "exp"},
                                          {"budgets", {10}},
                                          {"strategies", {"single-fidelity", "mf-mean"}},
                                          {"stats", {{"mode", "exact"}}},
                                          {"replications", 2},
                                          {"seed", 1}});
    const auto t0 = std::chrono::steady_clock::now();
    const RunResult r1 = run_cli("experiment -c " + cfg + " -o " + out1);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(r1.exit_code == 0);
    CHECK(secs < 5.0);
    const RunResult r2 = run_cli("experiment -c " + cfg + " -o " + out2);
    CHECK(r2.exit_code == 0);
    CHECK(slurp(out1 + "/report.json") == slurp(out2 + "/report.json"));
    CHECK(slurp(out1 + "/estimates.csv") == slurp(out2 + "/estimates.csv"));
}

TEST_CASE("MFLR_SEED overrides the config seed") {
    const std::string cfg = write_config(
        "stats_env.json",
        {{"mode", "pilot"}, {"family", "exp"}, {"n_pilot", 25}, {"seed", 1}});
    const RunResult base = run_cli("stats -c " + cfg);
    const RunResult same = run_cli("stats -c " + cfg, "MFLR_SEED=1");
    const RunResult other = run_cli("stats -c " + cfg, "MFLR_SEED=2");
    CHECK(base.out == same.out);
    CHECK(base.out != other.out);
}

TEST_CASE("unknown strategy and missing config are reported") {
    const std::string cfg = write_config("exp_badstrat.json",
                                         {{"family", "exp"},
                                          {"budgets", {10}},
                                          {"strategies", {"mf-magic"}},
                                          {"stats", {{"mode", "exact"}}},
                                          {"replications", 2}});
    const RunResult r = run_cli("experiment -c " + cfg);
    CHECK(r.exit_code == 3);
    CHECK(r.out.find("mf-magic") != std::string::npos);

    const RunResult missing = run_cli("stats -c /no/such/config.json");
    CHECK(missing.exit_code == 4);
}

TEST_CASE("packaged fig3a config exhibits the published strategy ordering") {
    // Same plan as configs/exp_fig3a.json but at R=150 to keep the suite fast;
    // the acceptance suite runs the full-size orderings.
    const std::string out = temp_dir() + "/fig3a_mini";
    const std::string cfg = write_config(
        "fig3a_mini.json",
        {{"family", "exp"},
         {"budgets", {10, 100}},
         {"strategies", {"single-fidelity", "mf-mean", "mf-alpha-star", "mf-a-star"}},
         {"stats", {{"mode", "exact"}}},
         {"replications", 150},
         {"seed", 1},
         {"workers", 4}});
    const RunResult r = run_cli("experiment -c " + cfg + " -o " + out);
    CHECK(r.exit_code == 0);

    const nlohmann::json report = nlohmann::json::parse(slurp(out + "/report.json"));
    auto trace = [&](double budget, const std::string& strategy) {
        for (const auto& cell : report.at("cells")) {
            if (cell.at("budget") == budget && cell.at("strategy") == strategy) {
                return cell.at("tr_cov_beta").get<double>();
            }
        }
        REQUIRE(false);
        return 0.0;
    };
    for (const double budget : {10.0, 100.0}) {
        CHECK(trace(budget, "single-fidelity") > trace(budget, "mf-mean"));
        CHECK(trace(budget, "mf-mean") > trace(budget, "mf-a-star"));
    }
}
