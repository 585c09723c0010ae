#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "okcanon/assignment.hpp"
#include "okcanon/corpus.hpp"
#include "okcanon/diffusion.hpp"
#include "okcanon/kge.hpp"
#include "okcanon/mixture.hpp"
#include "okcanon/side_info.hpp"

namespace okcanon {

enum class OptimizerKind { sgd, adam };

// How a phrase is embedded for triple scoring: the mean of its most probable
// cluster, or its own latent.
enum class CanonicalSource { cluster_mean, phrase_latent };

struct LossWeights {
    double clustering = 1.0;
    double diffusion = 0.6;
    double kge = 1.0;
    double side = 1.0;
};

struct LossReport {
    int epoch = 0;
    int stage = 1;
    double diffusion = 0.0;
    double clustering = 0.0;
    double kge = 0.0;
    double side = 0.0;
    double objective = 0.0;
};

// Immutable training inputs shared by both stages.
struct Problem {
    const Corpus* corpus = nullptr;
    Eigen::MatrixXd inputs; // column-per-phrase vectors entering the noising chain
    ClusterAssignment weak_labels;
    CandidatePairs pairs;
    NoiseSchedule schedule;
    bool use_diffusion = true; // false: heads act on the inputs directly
    CanonicalSource canonical_source = CanonicalSource::cluster_mean;
    int n_negatives = 20;

    Eigen::Index dim() const { return inputs.rows(); }
    Eigen::Index num_phrases() const { return inputs.cols(); }
};

struct ModelParams {
    NoiseNet net;
    LatentHeads heads;
    MixtureParams mixture;
    KgeParams kge;
    Eigen::MatrixXd projection; // kge_dim x latent dim; empty when dims match

    bool has_projection() const { return projection.size() > 0; }
};

struct AdamState {
    std::vector<Eigen::VectorXd> m, v; // one flat entry per parameter block
    std::int64_t step = 0;
};

struct TrainState {
    ModelParams params;
    LossWeights weights;
    OptimizerKind optimizer = OptimizerKind::sgd;
    std::uint64_t seed = 0;
    int epoch = 0; // global across stages
    AdamState adam;
};

// All noise realized for one objective evaluation. Freezing it makes the
// objective a deterministic function of the parameters, which is what both
// the update step and finite-difference checks differentiate.
struct EpochContext {
    Eigen::MatrixXd chain_noise;  // aggregate forward noise per phrase
    Eigen::MatrixXd latent_noise; // reparametrization draw per phrase
    std::vector<int> loss_steps;  // step draw per phrase for the denoising loss
    Eigen::MatrixXd loss_noise;   // target noise per phrase
    std::vector<std::vector<Triple>> negatives; // per corpus triple; stage 2 only
    std::vector<std::uint32_t> canon_clusters;  // frozen argmax cluster per phrase
};

struct Gradients {
    NoiseNet::Grads net;
    Eigen::MatrixXd d_head_mean, d_head_log_scale;
    MixtureGrads mixture;
    Eigen::MatrixXd d_relations;
    Eigen::MatrixXd d_projection;
};

Gradients zero_gradients(const ModelParams& params);

// Visits every trainable block paired with its gradient block, in a fixed
// order shared by the optimizer, checkpointing and finite-difference checks.
void visit_blocks(ModelParams& params, Gradients& grads,
                  const std::function<void(double*, double*, Eigen::Index)>& fn);

struct InitOptions {
    std::uint64_t seed = 42;
    LossWeights weights;
    OptimizerKind optimizer = OptimizerKind::sgd;
    int net_hidden_width = 0; // 0: twice the input dimension
    int net_hidden_layers = 2;
    int kge_dim = 0; // 0: latent dimension (no projection)
    double transe_margin = 1.0;
    KgeBackend backend = KgeBackend::hole;
};

// Builds the initial state: identity mean head, zero log-scale head, mixture
// statistics from the weak labels over the noiseless latents, seeded noise
// net and relation embeddings.
TrainState init_train_state(const Problem& problem, const InitOptions& options);

// Draws the stochastic context for the state's current epoch. Stage 2 adds
// negative samples and the frozen canonical cluster choice; with a zero KGE
// weight it draws exactly what stage 1 draws.
EpochContext draw_epoch_context(const TrainState& state, const Problem& problem,
                                int stage);

// Evaluates the stage objective for the frozen context. When `grads` is
// non-null, accumulates exact reverse-mode gradients of the weighted
// objective for every trainable parameter. Throws when a term is non-finite,
// naming the term.
LossReport compute_objective(const TrainState& state, const Problem& problem,
                             const EpochContext& ctx, int stage, Gradients* grads);

Gradients compute_gradients(const TrainState& state, const Problem& problem,
                            const EpochContext& ctx, int stage);

struct StageSettings {
    int epochs = 50;
    double learning_rate = 1e-3;
    double divergence_threshold = 1e6;
};

// Full-batch descent on the stage-1 objective (clustering + denoising +
// side information).
void stage_one(TrainState& state, const Problem& problem, const StageSettings& settings,
               std::vector<LossReport>& log);

// Stage 2 adds the triple-scoring term, refreshing canonical embeddings from
// the current argmax posteriors every epoch.
void stage_two(TrainState& state, const Problem& problem, const StageSettings& settings,
               std::vector<LossReport>& log);

// Noiseless per-phrase latents (mean path, zero reparametrization noise).
Eigen::MatrixXd inference_latents(const TrainState& state, const Problem& problem);

// Assigns each phrase to its argmax-posterior cluster on the noiseless path;
// empty clusters are dropped and indices re-densified. Uses no randomness.
ClusterAssignment infer_clusters(const TrainState& state, const Problem& problem);

// Versioned binary dump of all parameters, optimizer state, seed and epoch.
// Round-trips bit-exactly.
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

} // namespace okcanon
