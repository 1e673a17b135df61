// qci <subcommand> --config <file> [--out <dir>] [--jobs N]
// Exit codes: 0 success, 1 run aborted, 2 config error, 3 partial failures recorded in errors.csv.

#include "qci/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Joint eigenfunction experiments for quantum completely integrable systems"};
    app.set_version_flag("--version", std::string(qci::cli::kToolVersion));
    app.require_subcommand(1);

    std::string configPath, outDir;
    int jobs = 1;
    for (const auto& name : qci::cli::experiment_names()) {
        auto* sub = app.add_subcommand(name, "run a " + name + " experiment");
        sub->add_option("--config", configPath, "JSON run configuration")->required();
        sub->add_option("--out", outDir, "output directory (overrides the config)");
        sub->add_option("--jobs", jobs, "worker threads for independent rows")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        auto cfg = qci::cli::parse_config_text(qci::io::read_file(configPath));
        if (cfg.experiment != sub)
            qci::fail(qci::ErrorCode::ConfigError,
                      "experiment: config is for '" + cfg.experiment + "', subcommand is '" + sub + "'");
        if (outDir.empty()) outDir = cfg.output;
        if (outDir.empty()) qci::fail(qci::ErrorCode::ConfigError, "output: no output directory (use --out)");
        auto man = qci::cli::run(cfg, outDir, jobs);
        std::cout << "wrote " << outDir << " (config " << man.configHash.substr(0, 12) << ", " << man.errorCount
                  << " error rows)\n";
        return man.errorCount > 0 ? 3 : 0;
    } catch (const qci::Error& e) {
        std::cerr << e.what() << "\n";
        return e.code() == qci::ErrorCode::ConfigError ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
