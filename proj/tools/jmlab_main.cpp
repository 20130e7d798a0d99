#include <iostream>

#include "CLI11.hpp"
#include "io/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Periodic orbits, Jacobi metrics and intersection removal"};
    app.require_subcommand(1, 1);
    std::string config, out = ".";
    for (const auto& name : jmlab::io::command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "JSON run configuration")->required();
        sub->add_option("--out", out, "output directory");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : jmlab::io::ConfigFailure;
    }
    return jmlab::io::run(app.get_subcommands().front()->get_name(), config, out, std::cerr);
}
