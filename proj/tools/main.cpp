#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Nonparametric Bayesian inference of stochastic blockmodels"};
    app.require_subcommand(1);
    sbmcli::setup_generate(app);
    sbmcli::setup_infer(app);
    sbmcli::setup_predict(app);
    sbmcli::setup_bp(app);
    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
