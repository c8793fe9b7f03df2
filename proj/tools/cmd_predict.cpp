#include "commands.hpp"

#include <fstream>

#include "sbm/graph.hpp"
#include "sbm/predict.hpp"
#include "sbm/serialize.hpp"

namespace sbmcli {

namespace {

struct PredictArgs {
    std::string input;
    std::string candidates_path;
    std::string model = "dc";
    bool nested = false;
    int sweeps = 2000;
    int burn_in = 1000;
    int thinning = 10;
    double epsilon = 1.0;
    SeedOption seed;
    CommonOutput out;
};

// candidates file: JSON array of candidates; each candidate is an array of
// [u, v, delta] entries
std::vector<sbm::EdgePerturbation> load_candidates(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw CLI::ValidationError("predict", "cannot open candidates file: " + path);
    json j;
    in >> j;
    std::vector<sbm::EdgePerturbation> out;
    for (const auto& cand : j) {
        sbm::EdgePerturbation pert;
        for (const auto& entry : cand)
            pert.entries.push_back({entry.at(0).get<int>(), entry.at(1).get<int>(),
                                    entry.at(2).get<int64_t>()});
        out.push_back(std::move(pert));
    }
    return out;
}

void run_predict(const PredictArgs& a) {
    WallClock clock;
    sbm::Graph g = sbm::load_edge_list_file(a.input);
    auto candidates = load_candidates(a.candidates_path);
    sbm::ModelSpec spec = sbm::parse_model_spec(a.model, a.nested);
    sbm::PredictConfig cfg;
    cfg.mcmc.sweeps = a.sweeps;
    cfg.mcmc.burn_in = a.burn_in;
    cfg.mcmc.thinning = a.thinning;
    cfg.mcmc.epsilon = a.epsilon;
    std::cerr << "predict: N=" << g.num_nodes() << " E=" << g.num_edges()
              << " candidates=" << candidates.size() << " seed=" << a.seed.seed
              << "\n";
    sbm::PredictionScore score =
        sbm::score_perturbations(g, candidates, spec, cfg, a.seed.seed);
    json result{{"lambda", score.lambda},
                {"log_score", score.log_score},
                {"std_error", score.std_error},
                {"samples", score.samples}};
    json config{{"model", a.model},   {"nested", a.nested}, {"sweeps", a.sweeps},
                {"burn_in", a.burn_in}, {"thinning", a.thinning},
                {"epsilon", a.epsilon}};
    result["manifest"] = sbm::make_manifest(
        "predict", config, a.seed.seed,
        json{{"edges", sbm::file_digest(a.input)},
             {"candidates", sbm::file_digest(a.candidates_path)}},
        clock.seconds());
    a.out.write(result);
}

} // namespace

void setup_predict(CLI::App& app) {
    auto args = std::make_shared<PredictArgs>();
    CLI::App* cmd = app.add_subcommand(
        "predict", "score missing/spurious edge candidates by posterior ratio");
    cmd->add_option("input", args->input, "edge list file")->required();
    cmd->add_option("--candidates", args->candidates_path,
                    "JSON file with candidate perturbations")
        ->required();
    cmd->add_option("--model", args->model, "sbm | dc | dc-hist");
    cmd->add_flag("--nested", args->nested, "nested priors");
    cmd->add_option("--sweeps", args->sweeps, "sampling sweeps");
    cmd->add_option("--burn-in", args->burn_in, "burn-in sweeps");
    cmd->add_option("--thin", args->thinning, "thinning interval");
    cmd->add_option("--epsilon", args->epsilon, "proposal smoothing");
    args->seed.attach(*cmd);
    args->out.attach(*cmd);
    cmd->callback([args] { run_predict(*args); });
}

} // namespace sbmcli
