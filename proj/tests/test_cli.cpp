#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "benchhedge/pricing.hpp"
#include "tool_lib.hpp"
#include "helpers.hpp"

using namespace benchhedge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json base_config() {
    return json::parse(R"({
      "model": {"variant": "stylized_mmm", "alpha0": 0.05, "beta": 0.05, "r": 0.0, "z0": 1.0},
      "grid": {"t0": 0.0, "T": 10.0, "n_steps": 16},
      "mc": {"n_paths": 4000, "master_seed": 42},
      "task": {"type": "price-zcb", "maturities": [2.0, 10.0], "with_mc": true},
      "output": {"dir": "out"}
    })");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("benchhedge_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("config validation is strict") {
    json config = base_config();
    CHECK_NOTHROW(tool::validate_config(config));

    SUBCASE("unknown keys are named") {
        config["grid"]["n_step"] = 8;
        try {
            tool::validate_config(config);
            FAIL("expected a config error");
        } catch (const tool::ConfigError& e) {
            CHECK(std::string(e.what()).find("n_step") != std::string::npos);
        }
    }
    SUBCASE("missing sections fail fast") {
        config.erase("mc");
        CHECK_THROWS_AS(tool::validate_config(config), tool::ConfigError);
    }
    SUBCASE("model invariants are enforced") {
        config["model"]["beta"] = -1.0;
        CHECK_THROWS_AS(tool::validate_config(config), tool::ConfigError);
    }
    SUBCASE("unknown task type") {
        config["task"] = {{"type", "price-everything"}};
        CHECK_THROWS_AS(tool::validate_config(config), tool::ConfigError);
    }
}

TEST_CASE("zcb task emits the closed form with manifest bookkeeping") {
    const fs::path dir = temp_dir("zcb");
    json config = base_config();
    const auto result = tool::run_task(config, dir.string());
    CHECK(fs::exists(dir / "results.csv"));
    CHECK(fs::exists(dir / "plot.csv"));
    CHECK(fs::exists(dir / "manifest.json"));

    const std::string csv = slurp(dir / "results.csv");
    StylizedMmmParams params;
    params.alpha0 = 0.05;
    params.beta = 0.05;
    params.z0 = 1.0;
    const double expected = zcb_price(0.0, 1.0, params, 10.0).p_hat;
    CHECK(csv.find(tool::fmt17(expected)) != std::string::npos);

    const json manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("master_seed") == 42);
    CHECK(manifest.at("task") == "price-zcb");
    CHECK(manifest.at("config_hash") == tool::config_hash(config));
}

TEST_CASE("identical configs give byte-identical outputs at any thread count") {
    const fs::path dir1 = temp_dir("det1");
    const fs::path dir2 = temp_dir("det2");
    json config = base_config();
    config["task"] = {{"type", "simulate"}, {"channels", {"Z", "s_hat_0"}}};
    tool::run_task(config, dir1.string(), 1);
    tool::run_task(config, dir2.string(), 4);
    CHECK(slurp(dir1 / "results.csv") == slurp(dir2 / "results.csv"));
    CHECK(slurp(dir1 / "plot.csv") == slurp(dir2 / "plot.csv"));
    json m1 = json::parse(slurp(dir1 / "manifest.json"));
    json m2 = json::parse(slurp(dir2 / "manifest.json"));
    m1.erase("wall_ms");
    m2.erase("wall_ms");
    CHECK(m1 == m2);
}

TEST_CASE("hedge and regression tasks produce their summaries") {
    const fs::path dir = temp_dir("hedge");
    json config = base_config();
    config["model"] = {{"variant", "gbm_const_theta"},
                       {"theta", {0.2, 0.1}},
                       {"vols", {{0.25, 0.05}, {0.05, 0.3}}}};
    config["grid"] = {{"t0", 0.0}, {"T", 1.0}, {"n_steps", 32}};
    config["mc"] = {{"n_paths", 2000}, {"master_seed", 7}};
    config["task"] = {{"type", "hedge"},
                      {"account", 1},
                      {"vols", {{0.25, 0.05}, {0.05, 0.3}}},
                      {"maturity", 1.0}};
    tool::run_task(config, dir.string());
    const std::string csv = slurp(dir / "results.csv");
    CHECK(csv.find("replication_rms") != std::string::npos);

    config["task"]["type"] = "gkw-regress";
    config["task"]["basis_degree"] = 3;
    const fs::path dir2 = temp_dir("gkw");
    tool::run_task(config, dir2.string());
    CHECK(slurp(dir2 / "results.csv").find("integrand_rel_rms") != std::string::npos);

    SUBCASE("the refinement study emits a replication-rms series") {
        config["task"].erase("basis_degree");
        config["task"]["type"] = "hedge";
        config["task"]["refinement_steps"] = {16, 32};
        const fs::path dir3 = temp_dir("hedge_refine");
        tool::run_task(config, dir3.string());
        const std::string plot = slurp(dir3 / "plot.csv");
        CHECK(plot.find("replication_rms") != std::string::npos);
    }
}

TEST_CASE("verify task writes a report and fails loudly on red checks") {
    const fs::path dir = temp_dir("verify");
    json config = base_config();
    config["mc"] = {{"n_paths", 20000}, {"master_seed", 11}};
    config["task"] = {{"type", "verify"},
                      {"checks", {"supermartingale", "martingale_bond", "strict_local_martingale"}}};
    tool::run_task(config, dir.string());
    const json report = json::parse(slurp(dir / "report.json"));
    REQUIRE(report.is_array());
    CHECK(report.size() == 3);
    for (const auto& entry : report) CHECK(entry.at("verdict") == "pass");
}

TEST_CASE("tree-lab task consumes the shipped tree format") {
    const fs::path dir = temp_dir("treelab");
    const fs::path tree_path = dir / "tree.json";
    {
        std::ofstream out(tree_path);
        out << R"({"nodes": [
          {"id": 0, "time": 0.0, "parent": null, "prob": 1, "assets": [1.0]},
          {"id": 1, "time": 1.0, "parent": 0, "prob": 0.25, "assets": [1.2]},
          {"id": 2, "time": 1.0, "parent": 0, "prob": 0.5, "assets": [1.0]},
          {"id": 3, "time": 1.0, "parent": 0, "prob": 0.25, "assets": [0.8]}
        ]})";
    }
    json config = base_config();
    config["task"] = {{"type", "tree-lab"},
                      {"tree_file", tree_path.string()},
                      {"operations", {"doob", "structure", "fs", "brute-force"}},
                      {"claim", {1.0, 0.0, 0.0}},
                      {"exact", true}};
    tool::run_task(config, dir.string());
    const json results = json::parse(slurp(dir / "results.json"));
    CHECK(results.at("fs").at("max_identity_error").get<double>() <= 1e-12);
    CHECK(results.at("fs_exact").at("max_identity_error").get<double>() == 0.0);
    CHECK(results.at("brute_force").at("pass") == true);

    SUBCASE("a structure-condition violation surfaces as a numerical failure") {
        const fs::path bad_path = dir / "bad_tree.json";
        {
            std::ofstream out(bad_path);
            out << R"({"nodes": [
              {"id": 0, "parent": null, "prob": 1, "assets": [1.0]},
              {"id": 1, "parent": 0, "prob": 1.0, "assets": [0.9]}
            ]})";
        }
        config["task"]["tree_file"] = bad_path.string();
        config["task"]["operations"] = {"structure"};
        config["task"]["claim"] = {1.0};
        CHECK_THROWS_AS(tool::run_task(config, (dir / "bad").string()),
                        tool::NumericalError);
    }
}

TEST_CASE("the installed binary honors the exit-code contract") {
#ifdef BENCHHEDGE_CLI_PATH
    const fs::path dir = temp_dir("cli");
    const fs::path cfg = dir / "config.json";
    {
        std::ofstream out(cfg);
        json config = base_config();
        config["mc"]["n_paths"] = 500;
        config["task"] = {{"type", "price-zcb"}, {"maturities", {2.0}}};
        out << config.dump();
    }
    const std::string base = std::string(BENCHHEDGE_CLI_PATH) + " price-zcb --config " +
                             cfg.string() + " --out " + (dir / "out").string();
    CHECK(std::system((base + " > /dev/null 2>&1").c_str()) == 0);
    CHECK(fs::exists(dir / "out" / "results.csv"));

    // mismatched task name is a configuration error (exit code 1)
    const std::string wrong = std::string(BENCHHEDGE_CLI_PATH) + " verify --config " +
                              cfg.string() + " --out " + (dir / "out2").string() +
                              " > /dev/null 2>&1";
    const int rc = std::system(wrong.c_str());
    CHECK(WEXITSTATUS(rc) == 1);
#endif
}
