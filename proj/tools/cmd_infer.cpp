#include "commands.hpp"

#include <cmath>
#include <thread>

#include "sbm/estimators.hpp"
#include "sbm/graph.hpp"
#include "sbm/likelihood.hpp"
#include "sbm/mcmc.hpp"
#include "sbm/nested.hpp"
#include "sbm/overlap_mcmc.hpp"
#include "sbm/serialize.hpp"

namespace sbmcli {

namespace {

// bits go out with three decimals
double bits3(double sigma) { return std::round(sigma * 1000.0) / 1000.0; }

struct InferArgs {
    std::string input;
    std::string model = "dc";
    std::string edge_prior = "geometric";
    bool nested = false;
    bool overlap = false;
    int fix_b = 0; // 0 = free
    int sweeps = 1000;
    int burn_in = 1000;
    int thinning = 10;
    int restarts = 10;
    double epsilon = 1.0;
    double beta_max = 64.0;
    int anneal_sweeps = 200;
    int threads = 0;
    bool deterministic = false;
    bool emit_marginals = false;
    SeedOption seed;
    CommonOutput out;
};

sbm::McmcConfig make_config(const InferArgs& a) {
    sbm::McmcConfig cfg;
    cfg.epsilon = a.epsilon;
    cfg.sweeps = a.sweeps;
    cfg.burn_in = a.burn_in;
    cfg.thinning = a.thinning;
    cfg.restarts = a.restarts;
    cfg.beta_max = a.beta_max;
    cfg.anneal_sweeps = a.anneal_sweeps;
    if (a.fix_b > 0) {
        cfg.min_groups = a.fix_b;
        cfg.max_groups = a.fix_b;
    }
    cfg.threads = a.deterministic
                      ? 1
                      : (a.threads > 0 ? a.threads
                                       : static_cast<int>(
                                             std::thread::hardware_concurrency()));
    return cfg;
}

json infer_map(const sbm::Graph& g, const InferArgs& a, const sbm::ModelSpec& spec,
               const sbm::McmcConfig& cfg) {
    json result;
    if (a.overlap) {
        sbm::OverlapFit fit = sbm::map_estimate_overlap(g, cfg, a.fix_b, a.seed.seed);
        result["state_kind"] = "overlap";
        result["num_labels"] = fit.num_labels;
        result["sigma_bits"] = bits3(fit.sigma_bits);
        json labels = json::array();
        const sbm::Graph& gg = fit.labeling.graph();
        for (int64_t t = 0; t < gg.num_instances(); ++t) {
            int p = gg.instance_pair(t);
            labels.push_back(json::array({gg.edges()[p].u, gg.edges()[p].v,
                                          fit.labeling.label(2 * t),
                                          fit.labeling.label(2 * t + 1)}));
        }
        result["half_edge_labels"] = labels;
    } else if (spec.nested) {
        sbm::NestedFit fit = sbm::map_estimate_nested(g, spec, cfg, a.seed.seed);
        result["state_kind"] = "nested";
        result["num_groups"] = fit.bottom_groups;
        result["sigma_bits"] = bits3(fit.sigma_bits);
        result["hierarchy"] = sbm::hierarchy_to_json(fit.hierarchy);
        result["partition"] = sbm::partition_to_json(fit.hierarchy.level(0));
    } else {
        sbm::FlatFit fit = sbm::map_estimate_flat(g, spec, cfg, a.seed.seed);
        result["state_kind"] = "flat";
        result["num_groups"] = fit.num_groups;
        result["sigma_bits"] = bits3(fit.sigma_bits);
        result["partition"] = sbm::partition_to_json(fit.partition);
    }
    return result;
}

json infer_sample(const sbm::Graph& g, const InferArgs& a,
                  const sbm::ModelSpec& spec, const sbm::McmcConfig& cfg) {
    if (a.sweeps < 1)
        throw CLI::ValidationError("sample", "--sweeps must be >= 1");
    sbm::Rng rng = sbm::make_rng(a.seed.seed);
    sbm::MarginalTable table(g.num_nodes());
    sbm::SweepStats stats;
    if (spec.nested) {
        sbm::McmcConfig icfg = cfg;
        icfg.restarts = std::min(cfg.restarts, 3);
        sbm::NestedFit init = sbm::map_estimate_nested(g, spec, icfg, a.seed.seed);
        sbm::NestedChain chain(g, init.hierarchy, spec, cfg);
        stats = sbm::sample_posterior(chain, cfg, rng, [&](sbm::Chain& ch) {
            table.add_sample(static_cast<sbm::NestedChain&>(ch).hierarchy().level(0));
        });
    } else {
        sbm::Rng irng = sbm::spawn_rng(a.seed.seed, 12345);
        sbm::FlatChain chain = sbm::agglomerative_init(g, spec, cfg, irng);
        stats = sbm::sample_posterior(chain, cfg, rng, [&](sbm::Chain& ch) {
            table.add_sample(static_cast<sbm::FlatChain&>(ch).partition());
        });
    }
    std::cerr << "sample: " << cfg.sweeps << " sweeps, acceptance rate "
              << (stats.proposals
                      ? static_cast<double>(stats.accepted) / stats.proposals
                      : 0.0)
              << "\n";
    json result;
    result["samples"] = table.num_samples();
    json hist = json::object();
    for (const auto& [b, c] : table.num_groups_histogram())
        hist[std::to_string(b)] = c;
    result["num_groups_histogram"] = hist;
    sbm::Partition marg = table.argmax_partition();
    result["marginal_partition"] = sbm::partition_to_json(marg);
    result["num_groups_marginal"] = marg.num_groups();
    if (a.emit_marginals) {
        json rows = json::array();
        for (int i = 0; i < g.num_nodes(); ++i)
            rows.push_back(table.row(i));
        result["marginals"] = rows;
    }
    return result;
}

void run(const InferArgs& a, bool sampling) {
    WallClock clock;
    if (a.overlap && a.nested)
        throw CLI::ValidationError("infer",
                                   "--overlap does not combine with --nested");
    if (a.overlap && sampling)
        throw CLI::ValidationError("sample", "--overlap supports 'infer' only");
    sbm::Graph g = sbm::load_edge_list_file(a.input);
    sbm::ModelSpec spec = sbm::parse_model_spec(a.model, a.nested, a.edge_prior);
    sbm::McmcConfig cfg = make_config(a);
    std::cerr << (sampling ? "sample" : "infer") << ": N=" << g.num_nodes()
              << " E=" << g.num_edges() << " model=" << spec.name()
              << " seed=" << a.seed.seed << "\n";
    json result = sampling ? infer_sample(g, a, spec, cfg) : infer_map(g, a, spec, cfg);
    json config{{"model", a.model},       {"nested", a.nested},
                {"overlap", a.overlap},   {"edge_prior", a.edge_prior},
                {"fix_B", a.fix_b},       {"sweeps", a.sweeps},
                {"burn_in", a.burn_in},   {"thinning", a.thinning},
                {"restarts", a.restarts}, {"epsilon", a.epsilon},
                {"beta_max", a.beta_max}, {"anneal_sweeps", a.anneal_sweeps},
                {"threads", cfg.threads}, {"deterministic", a.deterministic}};
    result["manifest"] =
        sbm::make_manifest(sampling ? "sample" : "infer", config, a.seed.seed,
                           json{{"edges", sbm::file_digest(a.input)}},
                           a.deterministic ? 0.0 : clock.seconds());
    a.out.write(result);
}

void add_common(CLI::App* cmd, std::shared_ptr<InferArgs> args) {
    cmd->add_option("input", args->input, "edge list file")->required();
    cmd->add_option("--model", args->model, "sbm | dc | dc-hist");
    cmd->add_flag("--nested", args->nested, "nested (hierarchical) priors");
    cmd->add_flag("--overlap", args->overlap, "overlapping model (half-edge labels)");
    cmd->add_option("--edge-prior", args->edge_prior,
                    "geometric | uniform (flat models)");
    cmd->add_option("--fix-B", args->fix_b, "constrain the number of groups");
    cmd->add_option("--sweeps", args->sweeps, "sampling sweeps");
    cmd->add_option("--burn-in", args->burn_in, "burn-in sweeps");
    cmd->add_option("--thin", args->thinning, "thinning interval");
    cmd->add_option("--restarts", args->restarts, "independent restarts");
    cmd->add_option("--epsilon", args->epsilon, "proposal smoothing");
    cmd->add_option("--beta-schedule", args->beta_max,
                    "top of the geometric beta ladder");
    cmd->add_option("--anneal-sweeps", args->anneal_sweeps,
                    "sweeps across the beta ladder");
    cmd->add_option("--threads", args->threads, "worker threads (0 = auto)");
    cmd->add_flag("--deterministic", args->deterministic,
                  "single-thread fixed-seed mode");
    args->seed.attach(*cmd);
    args->out.attach(*cmd);
}

} // namespace

void setup_infer(CLI::App& app) {
    auto margs = std::make_shared<InferArgs>();
    CLI::App* map_cmd =
        app.add_subcommand("infer", "maximum a posteriori fit (minimum description length)");
    add_common(map_cmd, margs);
    map_cmd->callback([margs] { run(*margs, false); });

    auto sargs = std::make_shared<InferArgs>();
    CLI::App* sample_cmd =
        app.add_subcommand("sample", "posterior sampling: marginals and B histogram");
    add_common(sample_cmd, sargs);
    sample_cmd->add_flag("--emit-marginals", sargs->emit_marginals,
                         "include the full marginal table in the output");
    sample_cmd->callback([sargs] { run(*sargs, true); });
}

} // namespace sbmcli
