// Batch front door: one subcommand per pipeline, configuration from a file,
// artifacts and a digest manifest into the output directory.
//
//   plaplab <subcommand> --config PATH [--out DIR] [--quiet]
//
// Exit status: 0 success, 1 error, 2 well-formed non-convergence.

#include "plaplab/config.hpp"
#include "plaplab/errors.hpp"
#include "plaplab/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for quasilinear elliptic systems with "
                 "finite, blow-up, and mixed boundary data"};
    app.require_subcommand(1);

    struct Args {
        std::string config;
        std::string out;
        bool quiet = false;
    };

    std::vector<std::pair<plaplab::Command, CLI::App*>> subs;
    std::map<const CLI::App*, Args> args;

    auto add = [&](plaplab::Command cmd, const std::string& help) {
        CLI::App* sub = app.add_subcommand(plaplab::command_name(cmd), help);
        Args& a = args[sub];
        sub->add_option("--config", a.config, "configuration file")->required();
        sub->add_option("--out", a.out, "output directory (overrides out_dir)");
        sub->add_flag("--quiet", a.quiet, "suppress progress output");
        subs.emplace_back(cmd, sub);
    };

    add(plaplab::Command::KoCheck, "growth-condition check for a nonlinearity");
    add(plaplab::Command::Solve, "Dirichlet solve with finite boundary data");
    add(plaplab::Command::Blowup, "monotone boundary escalation toward blow-up");
    add(plaplab::Command::Mixed, "escalation with a fixed-boundary complement");
    add(plaplab::Command::Entire, "entire large solution via ball exhaustion");
    add(plaplab::Command::Verify, "sub/super-solution and comparison checks on stored fields");

    CLI11_PARSE(app, argc, argv);

    for (const auto& [cmd, sub] : subs) {
        if (!sub->parsed()) continue;
        const Args& a = args[sub];
        try {
            plaplab::RunConfig cfg = plaplab::load_config(a.config, cmd);
            plaplab::RunResult result =
                plaplab::run_command(cfg, a.out, a.quiet ? nullptr : &std::cout);
            return result.exit_code;
        } catch (const plaplab::ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 1;
        } catch (const plaplab::Error& e) {
            std::cerr << plaplab::command_name(cmd) << ": " << e.what() << "\n";
            return 1;
        } catch (const std::exception& e) {
            std::cerr << plaplab::command_name(cmd) << ": unexpected error: " << e.what() << "\n";
            return 1;
        }
    }
    return 1;
}
