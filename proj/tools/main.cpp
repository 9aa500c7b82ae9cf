#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tool_lib.hpp"

namespace {

void emit_error(const std::string& out_dir, int code, const std::string& message) {
    nlohmann::json err;
    err["error"] = message;
    err["code"] = code;
    std::cerr << err.dump() << std::endl;
    if (!out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (!ec) {
            std::ofstream out(std::filesystem::path(out_dir) / "error.json");
            out << err.dump(2) << '\n';
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Batch driver for benchmarked hedging experiments"};
    app.name("bench-hedge");

    std::string task;
    std::string config_path;
    std::string out_dir;
    unsigned threads = 0;
    app.add_option("task", task,
                   "Task to run (simulate, price-zcb, price-put, price-defaultable-put, hedge, "
                   "gkw-regress, verify, tree-lab)")
        ->required();
    app.add_option("--config", config_path, "Path to the experiment config (JSON)")->required();
    app.add_option("--threads", threads, "Worker-thread cap (0 = hardware); never changes results");
    app.add_option("--out", out_dir, "Output directory (overrides config and OUTPUT_DIR)");

    CLI11_PARSE(app, argc, argv);

    nlohmann::json config;
    try {
        config = benchhedge::tool::load_config(config_path);
        const std::string config_task = config.at("task").at("type").get<std::string>();
        if (config_task != task)
            throw benchhedge::tool::ConfigError("command-line task '" + task +
                                                "' does not match config task '" + config_task +
                                                "'");
    } catch (const std::exception& e) {
        emit_error(out_dir, 1, e.what());
        return 1;
    }

    try {
        const auto result = benchhedge::tool::run_task(config, out_dir, threads);
        std::cout << "wrote " << result.artifacts.size() << " artifact(s) to "
                  << result.output_dir.string() << std::endl;
        return 0;
    } catch (const benchhedge::tool::ConfigError& e) {
        emit_error(out_dir, 1, e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error(out_dir, 2, e.what());
        return 2;
    }
}
