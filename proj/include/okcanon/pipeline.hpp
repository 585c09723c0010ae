#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "okcanon/corpus.hpp"
#include "okcanon/hac.hpp"
#include "okcanon/metrics.hpp"
#include "okcanon/trainer.hpp"

namespace okcanon {

// Full run configuration. Every field mirrors a JSON key of the same name
// and can be overridden by a same-named CLI flag.
struct RunConfig {
    // input files
    std::string triples;
    std::string gold;
    std::string sentences;
    std::string vectors;
    std::string contextual_vectors;
    std::string paraphrase_edges;
    std::string entity_links;
    // outputs
    std::string output_dir = ".";
    // dimensions
    int dim = 100;
    int kge_dim = 0; // 0: latent dimension, no projection
    // noising chain
    int time_steps = 2;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int net_hidden_width = 0; // 0: twice the latent dimension
    int net_hidden_layers = 2;
    // agglomerative initialization
    std::string linkage = "complete";
    double hac_threshold = 0.4;
    std::vector<double> hac_tune_thresholds; // grid searched on validation gold when set
    // training
    int epochs_stage1 = 50;
    int epochs_stage2 = 50;
    double lr_stage1 = 1e-3;
    double lr_stage2 = 1e-5;
    std::string optimizer = "sgd";
    std::uint64_t seed = 42;
    int n_negatives = 20;
    double lambda_diff = 0.6;
    double lambda_clu = 1.0;
    double lambda_kge = 1.0;
    double lambda_side = 1.0;
    double idf_threshold = 0.75;
    double transe_margin = 1.0;
    // switches
    bool augment = true;                          // off = no neighbor enhancement
    std::string kge_backend = "hole";             // "transe" swaps the scoring model
    std::string canonical_source = "cluster_mean"; // or "phrase_latent"
    bool no_diffusion = false; // heads act on raw inputs, zero denoising weight
    bool no_side = false;      // no candidate pairs, zero side weight
};

RunConfig config_from_json_file(const std::filesystem::path& path);
// Applies the keys present in a JSON object on top of `config`.
void apply_config_json(RunConfig& config, const std::string& json_text);

struct PipelineResult {
    Corpus corpus;
    GoldLabels gold;
    bool has_gold = false;
    ClusterAssignment hac_assignment;
    ClusterAssignment assignment;
    std::vector<LossReport> loss_log;
    std::optional<Metrics> metrics;
    std::optional<Metrics> hac_metrics;
    double hac_threshold_used = 0.0;
};

// Ingestion, initialization, two-stage training, and inference.
PipelineResult run_canonicalize(const RunConfig& config);

// One line per cluster, members as tab-separated surface strings.
// Clusters are ordered by their smallest member id, members by id.
void write_cluster_file(const std::filesystem::path& path, const ClusterAssignment& pred,
                        const Corpus& corpus);
void write_loss_log(const std::filesystem::path& path, const std::vector<LossReport>& log);
void write_metrics_file(const std::filesystem::path& path, const Metrics& metrics);

// Writes clusters.tsv, loss_log.csv and, when gold was given, metrics.json
// under config.output_dir.
void write_outputs(const RunConfig& config, const PipelineResult& result);

// Standalone scoring of a cluster file against a gold file. Every predicted
// phrase must carry a gold label unless `skip_unlabeled`.
Metrics evaluate_files(const std::filesystem::path& pred_path,
                       const std::filesystem::path& gold_path, bool skip_unlabeled = false);

enum class SweepAxis { dim, diffusion_weight };

struct SweepRow {
    double value = 0.0;
    bool ok = false;
    std::string error;
    Metrics metrics;
};

// Runs the full pipeline once per value with a shared seed; failures are
// recorded and the sweep continues.
std::vector<SweepRow> run_sweep(const RunConfig& base, SweepAxis axis,
                                const std::vector<double>& values);
std::string sweep_csv(const std::vector<SweepRow>& rows);

} // namespace okcanon
