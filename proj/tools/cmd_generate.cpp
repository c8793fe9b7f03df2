#include "commands.hpp"

#include <fstream>

#include "sbm/generators.hpp"
#include "sbm/graph.hpp"
#include "sbm/serialize.hpp"

namespace sbmcli {

namespace {

struct GenerateArgs {
    std::string kind; // pp | sbm | dc
    std::string out_prefix = "generated";
    int n = 1000;
    int b = 2;
    double avg_k = 3.0;
    double eps = 0.0;
    double lambda_in = 0.0, lambda_out = 0.0;
    SeedOption seed;
};

void run_generate(const GenerateArgs& a) {
    WallClock clock;
    sbm::Rng rng = sbm::make_rng(a.seed.seed);
    sbm::Graph g;
    sbm::Partition truth;
    if (a.kind == "pp") {
        sbm::PlantedPartitionParams pp{a.b, a.n, a.avg_k, a.eps};
        auto sample = sbm::sample_planted_partition(pp, rng);
        g = std::move(sample.graph);
        truth = std::move(sample.partition);
    } else if (a.kind == "sbm" || a.kind == "dc") {
        // balanced groups with the given in/out rates
        std::vector<int> labels(a.n);
        for (int i = 0; i < a.n; ++i)
            labels[i] = i % a.b;
        truth = sbm::Partition(std::move(labels));
        sbm::SymMatrix lambda(a.b);
        for (int r = 0; r < a.b; ++r)
            for (int s = r; s < a.b; ++s)
                lambda.set(r, s, r == s ? a.lambda_in : a.lambda_out);
        if (a.kind == "sbm") {
            g = sbm::sample_poisson_sbm(truth, lambda, rng);
        } else {
            std::vector<double> theta(a.n);
            std::vector<double> tot(a.b, 0.0);
            for (int i = 0; i < a.n; ++i)
                tot[truth[i]] += 1.0;
            for (int i = 0; i < a.n; ++i)
                theta[i] = 1.0 / tot[truth[i]];
            g = sbm::sample_dc_sbm(truth, lambda, theta, rng);
        }
    } else {
        throw CLI::ValidationError("generate", "unknown model kind: " + a.kind);
    }
    std::string edges_path = a.out_prefix + ".edges";
    std::string truth_path = a.out_prefix + ".truth.json";
    std::string manifest_path = a.out_prefix + ".manifest.json";
    {
        std::ofstream out(edges_path);
        sbm::save_edge_list(g, out);
    }
    {
        std::ofstream out(truth_path);
        out << sbm::partition_to_json(truth).dump() << "\n";
    }
    json config{{"kind", a.kind},   {"N", a.n},     {"B", a.b},
                {"avg_k", a.avg_k}, {"eps", a.eps}, {"lambda_in", a.lambda_in},
                {"lambda_out", a.lambda_out}};
    json manifest = sbm::make_manifest(
        "generate", config, a.seed.seed,
        json{{"edges", sbm::file_digest(edges_path)},
             {"truth", sbm::file_digest(truth_path)}},
        clock.seconds());
    std::ofstream mout(manifest_path);
    mout << manifest.dump(2) << "\n";
    std::cerr << "generate: N=" << g.num_nodes() << " E=" << g.num_edges()
              << " seed=" << a.seed.seed << " -> " << edges_path << "\n";
}

} // namespace

void setup_generate(CLI::App& app) {
    auto args = std::make_shared<GenerateArgs>();
    CLI::App* cmd = app.add_subcommand(
        "generate", "sample a graph from a blockmodel and write edge list + truth");
    cmd->add_option("kind", args->kind, "pp | sbm | dc")->required();
    cmd->add_option("--out", args->out_prefix, "output file prefix");
    cmd->add_option("--N", args->n, "number of nodes");
    cmd->add_option("--B", args->b, "number of groups");
    cmd->add_option("--avg-k", args->avg_k, "average degree (pp)");
    cmd->add_option("--eps", args->eps, "epsilon = N(lambda_in - lambda_out) (pp)");
    cmd->add_option("--lambda-in", args->lambda_in, "diagonal rate (sbm/dc)");
    cmd->add_option("--lambda-out", args->lambda_out, "off-diagonal rate (sbm/dc)");
    args->seed.attach(*cmd);
    cmd->callback([args] { run_generate(*args); });
}

} // namespace sbmcli
