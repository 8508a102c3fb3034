#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rgf/config.hpp"
#include "rgf/figures.hpp"
#include "rgf/suite.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Reparametrized gradient flow: experiment runner and verification checks"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "run one experiment config and write its outputs");
    run_cmd->add_option("config", config_path, "path to a JSON run config")->required();

    std::string fig_kind, out_dir = ".";
    auto* emit_cmd = app.add_subcommand("emit", "emit figure data (fig1a, fig1b or fig2)");
    emit_cmd->add_option("figure", fig_kind, "one of fig1a, fig1b, fig2")->required();
    emit_cmd->add_option("--out", out_dir, "output directory")->required();

    std::string configs_dir = "configs";
    auto* self_cmd = app.add_subcommand("selfcheck", "run the full verification suite");
    self_cmd->add_option("--configs", configs_dir, "directory with the bundled configs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return rgf::run_config(config_path);
        if (emit_cmd->parsed()) {
            rgf::emit_figure_data(fig_kind, out_dir);
            std::cerr << "wrote " << fig_kind << " data to " << out_dir << "\n";
            return 0;
        }
        if (self_cmd->parsed()) {
            const auto results = rgf::run_acceptance_suite(configs_dir, std::cout);
            int failures = 0;
            for (const auto& r : results) failures += !r.pass;
            std::cout << (failures == 0 ? "all checks passed"
                                        : std::to_string(failures) + " check(s) failed")
                      << "\n";
            return failures == 0 ? 0 : 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
