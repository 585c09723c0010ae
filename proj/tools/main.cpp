#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "okcanon/error.hpp"
#include "okcanon/gradcheck.hpp"
#include "okcanon/pipeline.hpp"

namespace {

using namespace okcanon;

// Flags override config-file values only when actually passed.
void add_config_flags(CLI::App* cmd, RunConfig& config) {
    cmd->add_option("--triples", config.triples, "triple TSV (head, relation, tail[, id])");
    cmd->add_option("--gold", config.gold, "gold TSV (phrase, entity_id)");
    cmd->add_option("--sentences", config.sentences, "sentence TSV (triple_id, text)");
    cmd->add_option("--vectors", config.vectors, "word-vector text file");
    cmd->add_option("--contextual-vectors", config.contextual_vectors,
                    "per-phrase contextual vectors (underscored keys)");
    cmd->add_option("--paraphrase-edges", config.paraphrase_edges,
                    "paraphrase edge TSV (phrase_a, phrase_b)");
    cmd->add_option("--entity-links", config.entity_links,
                    "entity link TSV (phrase, entity_id)");
    cmd->add_option("--output-dir", config.output_dir, "output directory");
    cmd->add_option("--dim", config.dim, "word-vector dimension");
    cmd->add_option("--kge-dim", config.kge_dim, "triple-scoring dimension (0 = latent)");
    cmd->add_option("--time-steps", config.time_steps, "noising chain length");
    cmd->add_option("--beta-start", config.beta_start, "first noise variance");
    cmd->add_option("--beta-end", config.beta_end, "last noise variance");
    cmd->add_option("--net-hidden-width", config.net_hidden_width,
                    "noise net hidden width (0 = 2x latent dim)");
    cmd->add_option("--net-hidden-layers", config.net_hidden_layers,
                    "noise net hidden layers");
    cmd->add_option("--linkage", config.linkage, "single | complete | average");
    cmd->add_option("--hac-threshold", config.hac_threshold,
                    "cosine-distance merge threshold");
    cmd->add_option("--hac-tune-thresholds", config.hac_tune_thresholds,
                    "candidate thresholds tuned on validation gold");
    cmd->add_option("--epochs-stage1", config.epochs_stage1, "stage-1 epochs");
    cmd->add_option("--epochs-stage2", config.epochs_stage2, "stage-2 epochs");
    cmd->add_option("--lr-stage1", config.lr_stage1, "stage-1 learning rate");
    cmd->add_option("--lr-stage2", config.lr_stage2, "stage-2 learning rate");
    cmd->add_option("--optimizer", config.optimizer, "sgd | adam");
    cmd->add_option("--seed", config.seed, "run seed");
    cmd->add_option("--n-negatives", config.n_negatives, "negatives per positive triple");
    cmd->add_option("--lambda-diff", config.lambda_diff, "denoising loss weight");
    cmd->add_option("--lambda-clu", config.lambda_clu, "clustering loss weight");
    cmd->add_option("--lambda-kge", config.lambda_kge, "triple-scoring loss weight");
    cmd->add_option("--lambda-side", config.lambda_side, "side-information loss weight");
    cmd->add_option("--idf-threshold", config.idf_threshold, "token-overlap cutoff");
    cmd->add_option("--transe-margin", config.transe_margin, "margin for transe");
    cmd->add_flag("--augment,!--no-neighbor", config.augment,
                  "neighbor enhancement (default on)");
    cmd->add_option("--kge-backend", config.kge_backend, "hole | transe");
    cmd->add_option("--canonical-source", config.canonical_source,
                    "cluster_mean | phrase_latent");
    cmd->add_flag("--no-diffusion", config.no_diffusion,
                  "drop the noising chain and its loss");
    cmd->add_flag("--no-side", config.no_side, "drop side information");
}

RunConfig base_config(const std::string& config_path) {
    if (!config_path.empty()) return config_from_json_file(config_path);
    if (const char* env = std::getenv("OKCANON_CONFIG"); env && *env)
        return config_from_json_file(env);
    return RunConfig{};
}

int cmd_canonicalize(const RunConfig& config) {
    PipelineResult result = run_canonicalize(config);
    write_outputs(config, result);
    std::cout << "phrases: " << result.corpus.phrases.size()
              << "  triples: " << result.corpus.triples.size()
              << "  init clusters: " << result.hac_assignment.k
              << " (threshold " << result.hac_threshold_used << ")"
              << "  final clusters: " << result.assignment.k << '\n';
    if (result.metrics) {
        std::cout << "average F1: " << result.metrics->average_f1
                  << "  (init-only baseline: " << result.hac_metrics->average_f1 << ")\n";
        std::cout << metrics_to_json(*result.metrics) << '\n';
    }
    return 0;
}

int cmd_evaluate(const std::string& pred, const std::string& gold, bool skip_unlabeled,
                 const std::string& out_path) {
    Metrics metrics = evaluate_files(pred, gold, skip_unlabeled);
    const std::string json = metrics_to_json(metrics);
    std::cout << json << '\n';
    if (!out_path.empty()) write_metrics_file(out_path, metrics);
    return 0;
}

int cmd_sweep(const RunConfig& config, const std::string& axis_name,
              const std::vector<double>& values, const std::string& out_path) {
    SweepAxis axis;
    if (axis_name == "dim") axis = SweepAxis::dim;
    else if (axis_name == "diffusion_weight") axis = SweepAxis::diffusion_weight;
    else throw Error("cli", "unknown sweep axis: " + axis_name);

    const auto rows = run_sweep(config, axis, values);
    const std::string csv = sweep_csv(rows);
    std::cout << csv;
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw Error("cli", "cannot write sweep csv: " + out_path);
        out << csv;
    }
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, double eps, double tolerance) {
    const auto rows = run_gradient_checks(seed, eps);
    bool ok = true;
    for (const auto& row : rows) {
        const bool pass = row.max_rel_error <= tolerance;
        ok = ok && pass;
        std::printf("%-10s max relative error %.3e  [%s]\n", row.name.c_str(),
                    row.max_rel_error, pass ? "ok" : "FAIL");
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"open knowledge base canonicalizer"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path,
                   "JSON config (default: $OKCANON_CONFIG when set)");

    RunConfig config; // populated after the config file loads

    auto* canon = app.add_subcommand("canonicalize", "run the full pipeline");
    add_config_flags(canon, config);

    auto* eval = app.add_subcommand("evaluate", "score a cluster file against gold");
    std::string pred_path, gold_path, eval_out;
    bool skip_unlabeled = false;
    eval->add_option("--pred", pred_path, "cluster file (tab-separated members per line)")
        ->required();
    eval->add_option("--gold", gold_path, "gold TSV")->required();
    eval->add_flag("--skip-unlabeled", skip_unlabeled,
                   "ignore predicted phrases missing from gold");
    eval->add_option("--out", eval_out, "also write metrics JSON here");

    auto* sweep = app.add_subcommand("sweep", "re-run the pipeline over one axis");
    add_config_flags(sweep, config);
    std::string axis;
    std::vector<double> values;
    std::string sweep_out;
    sweep->add_option("--axis", axis, "dim | diffusion_weight")->required();
    sweep->add_option("--values", values, "axis values")->required();
    sweep->add_option("--out", sweep_out, "also write the CSV here");

    auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    std::uint64_t grad_seed = 42;
    double grad_eps = 1e-5, grad_tol = 1e-4;
    grad->add_option("--seed", grad_seed, "toy problem seed");
    grad->add_option("--eps", grad_eps, "finite-difference step");
    grad->add_option("--tolerance", grad_tol, "max relative error accepted");

    // Parse twice: the first pass only recovers --config so that defaults come
    // from the file and explicit flags still win.
    try {
        {
            CLI::App probe;
            probe.allow_extras();
            std::string probe_path;
            probe.add_option("--config", probe_path);
            probe.parse(argc, argv);
            config = base_config(probe_path);
        }
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const okcanon::Error& e) {
        std::cerr << "ERROR[" << e.module() << "] " << e.what() << '\n';
        return 1;
    }

    try {
        if (canon->parsed()) return cmd_canonicalize(config);
        if (eval->parsed()) return cmd_evaluate(pred_path, gold_path, skip_unlabeled, eval_out);
        if (sweep->parsed()) return cmd_sweep(config, axis, values, sweep_out);
        if (grad->parsed()) return cmd_gradcheck(grad_seed, grad_eps, grad_tol);
    } catch (const okcanon::Error& e) {
        std::cerr << "ERROR[" << e.module() << "] " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ERROR[unhandled] " << e.what() << '\n';
        return 1;
    }
    return 0;
}
