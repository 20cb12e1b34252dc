#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "reflow/experiments.hpp"

namespace {

struct Options {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
};

void write_bundle(const std::filesystem::path& out_dir, const reflow::OutputBundle& bundle) {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, content] : bundle) {
        const std::filesystem::path path = out_dir / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw reflow::Error(reflow::ErrorCode::io_error,
                                "cannot open " + path.string() + " for writing");
        }
        out << content;
        if (!out) {
            throw reflow::Error(reflow::ErrorCode::io_error,
                                "write failed for " + path.string());
        }
        std::cout << "wrote " << path.string() << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rectified-flow inversion, guidance, and attention-mask experiments"};
    app.require_subcommand(1);

    Options options;
    const char* const experiments[] = {"order",  "roundtrip", "multiturn",
                                       "prop1",  "lqr-limit", "mask"};
    const char* const descriptions[] = {
        "solver convergence order on an analytic flow",
        "single invert/sample reconstruction error",
        "multi-round editing drift report",
        "closed-form multi-target controller check",
        "finite-weight controller limit ladder",
        "attention mask pipeline over a stack fixture",
    };
    for (std::size_t i = 0; i < 6; ++i) {
        CLI::App* sub = app.add_subcommand(experiments[i], descriptions[i]);
        sub->add_option("--config", options.config_path, "experiment config file")
            ->required();
        sub->add_option("--out", options.out_dir, "output directory (default: .)");
        sub->add_option("--seed-override", options.seed_override,
                        "replace the config's seed list with this single seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << "error: usage: " << e.what() << '\n';
        return 2;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        reflow::RunConfig config = reflow::RunConfig::load(options.config_path, name);
        if (options.seed_override) {
            config.seeds = {*options.seed_override};
        }
        write_bundle(options.out_dir, reflow::run_experiment(name, config));
    } catch (const reflow::Error& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
