#include <cstdlib>
#include <iostream>
#include <thread>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "perslit/cli.hpp"

namespace {

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("perslit");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    const char* env = std::getenv("PERSLIT_LOG");
    if (!env) return;
    const std::string v = env;
    if (v == "error") spdlog::set_level(spdlog::level::err);
    else if (v == "warn") spdlog::set_level(spdlog::level::warn);
    else if (v == "info") spdlog::set_level(spdlog::level::info);
    else if (v == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ignoring PERSLIT_LOG='{}' (expected error, warn, info or debug)", v);
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"perslit: periodic narrow-slit scattering toolkit"};
    std::string command, config, out;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    app.add_option("command", command, "dispersion | transmit | enhance | fields | oracle | spp")->required();
    app.add_option("--config", config, "INI configuration file")->required();
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 1024));
    app.add_option("--out", out, "output file (default: [output] path, else stdout)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        const auto cmd = perslit::cli::parse_command(command);
        const auto cfg = perslit::cli::load_config(config, cmd);
        spdlog::info("command={} config_sha256={}", command, cfg.hash);
        for (const auto& [k, v] : cfg.echo) spdlog::debug("{} = {}", k, v);
        const auto rep = perslit::cli::run(cfg, jobs, out.empty() ? cfg.out_path : out);
        spdlog::info("rows={} warnings={}", rep.rows_written, rep.warnings.size());
        for (const auto& [phase, s] : rep.timing) spdlog::debug("timing {}: {:.3f} s", phase, s);
        return 0;
    } catch (const perslit::Error& e) {
        spdlog::error("{}", e.what());
        return perslit::cli::exit_code_for(e);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 3;
    }
}
