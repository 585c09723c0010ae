#include "okcanon/trainer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "okcanon/error.hpp"

namespace okcanon {

namespace {

// Substream salts so that adding or removing one kind of draw never perturbs
// the others.
enum : std::uint64_t {
    kSaltNetInit = 0xA1,
    kSaltRelationInit = 0xA2,
    kSaltProjectionInit = 0xA3,
    kSaltChainNoise = 0xB1,
    kSaltLatentNoise = 0xB2,
    kSaltLossDraws = 0xB3,
    kSaltNegatives = 0xB4,
};

Eigen::MatrixXd mean_path_inputs(const Problem& problem) {
    if (!problem.use_diffusion) return problem.inputs;
    const double scale =
        std::sqrt(problem.schedule.alpha_bar(problem.schedule.steps() - 1));
    return scale * problem.inputs;
}

Eigen::MatrixXd mean_latents(const ModelParams& params, const Eigen::MatrixXd& x) {
    return params.heads.mean_weights.transpose() * x;
}

void check_finite(double value, const char* term) {
    if (!std::isfinite(value))
        throw Error("trainer", std::string("non-finite loss term: ") + term);
}

void check_params_finite(const ModelParams& params) {
    auto ok = [](const Eigen::MatrixXd& m) { return m.allFinite(); };
    bool fine = ok(params.heads.mean_weights) && ok(params.heads.log_scale_weights) &&
                params.mixture.prior_logits.allFinite() && ok(params.mixture.means) &&
                ok(params.mixture.log_vars) && ok(params.kge.relations) &&
                (!params.has_projection() || ok(params.projection));
    for (const auto& w : params.net.weights) fine = fine && w.allFinite();
    for (const auto& b : params.net.biases) fine = fine && b.allFinite();
    if (!fine) throw Error("trainer", "non-finite parameter after update");
}

// Canonical entity table for triple scoring, using the frozen cluster choice.
Eigen::MatrixXd canonical_entities(const ModelParams& params, const Problem& problem,
                                   const std::vector<std::uint32_t>& canon_clusters,
                                   const Eigen::MatrixXd& latents) {
    const Eigen::Index n = problem.num_phrases();
    Eigen::MatrixXd source(params.mixture.dim(), n);
    if (problem.canonical_source == CanonicalSource::cluster_mean) {
        for (Eigen::Index i = 0; i < n; ++i)
            source.col(i) = params.mixture.means.col(canon_clusters[std::size_t(i)]);
    } else {
        source = latents;
    }
    if (!params.has_projection()) return source;
    return params.projection * source;
}

void run_stage(TrainState& state, const Problem& problem, const StageSettings& settings,
               int stage, std::vector<LossReport>& log) {
    const double floor_log = std::log(MixtureParams::kVarianceFloor);
    for (int e = 0; e < settings.epochs; ++e) {
        EpochContext ctx = draw_epoch_context(state, problem, stage);
        Gradients grads = zero_gradients(state.params);
        LossReport report = compute_objective(state, problem, ctx, stage, &grads);
        report.epoch = state.epoch;
        report.stage = stage;
        if (!std::isfinite(report.objective) ||
            report.objective > settings.divergence_threshold)
            throw Error("trainer", "stage " + std::to_string(stage) +
                                       " diverged at epoch " + std::to_string(state.epoch) +
                                       " (objective " + std::to_string(report.objective) +
                                       ")");
        log.push_back(report);

        if (state.optimizer == OptimizerKind::sgd) {
            const double lr = settings.learning_rate;
            visit_blocks(state.params, grads,
                         [lr](double* p, double* g, Eigen::Index n) {
                             for (Eigen::Index i = 0; i < n; ++i) p[i] -= lr * g[i];
                         });
        } else {
            // Adam with the stage learning rate.
            constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
            AdamState& adam = state.adam;
            adam.step += 1;
            const double corr1 = 1.0 - std::pow(b1, double(adam.step));
            const double corr2 = 1.0 - std::pow(b2, double(adam.step));
            std::size_t block = 0;
            const double lr = settings.learning_rate;
            visit_blocks(
                state.params, grads,
                [&](double* p, double* g, Eigen::Index n) {
                    if (adam.m.size() <= block) {
                        adam.m.emplace_back(Eigen::VectorXd::Zero(n));
                        adam.v.emplace_back(Eigen::VectorXd::Zero(n));
                    }
                    Eigen::VectorXd& m = adam.m[block];
                    Eigen::VectorXd& v = adam.v[block];
                    for (Eigen::Index i = 0; i < n; ++i) {
                        m(i) = b1 * m(i) + (1.0 - b1) * g[i];
                        v(i) = b2 * v(i) + (1.0 - b2) * g[i] * g[i];
                        const double mh = m(i) / corr1;
                        const double vh = v(i) / corr2;
                        p[i] -= lr * mh / (std::sqrt(vh) + eps);
                    }
                    ++block;
                });
        }

        // Keep the variance floor invariant across updates.
        state.params.mixture.log_vars =
            state.params.mixture.log_vars.array().max(floor_log).matrix();
        check_params_finite(state.params);
        ++state.epoch;
    }
}

} // namespace

void visit_blocks(ModelParams& params, Gradients& grads,
                  const std::function<void(double*, double*, Eigen::Index)>& fn) {
    for (std::size_t l = 0; l < params.net.weights.size(); ++l) {
        fn(params.net.weights[l].data(), grads.net.d_weights[l].data(),
           params.net.weights[l].size());
        fn(params.net.biases[l].data(), grads.net.d_biases[l].data(),
           params.net.biases[l].size());
    }
    fn(params.heads.mean_weights.data(), grads.d_head_mean.data(),
       params.heads.mean_weights.size());
    fn(params.heads.log_scale_weights.data(), grads.d_head_log_scale.data(),
       params.heads.log_scale_weights.size());
    fn(params.mixture.prior_logits.data(), grads.mixture.d_prior_logits.data(),
       params.mixture.prior_logits.size());
    fn(params.mixture.means.data(), grads.mixture.d_means.data(),
       params.mixture.means.size());
    fn(params.mixture.log_vars.data(), grads.mixture.d_log_vars.data(),
       params.mixture.log_vars.size());
    fn(params.kge.relations.data(), grads.d_relations.data(), params.kge.relations.size());
    if (params.has_projection())
        fn(params.projection.data(), grads.d_projection.data(), params.projection.size());
}

Gradients zero_gradients(const ModelParams& params) {
    Gradients g;
    g.net = params.net.zero_grads();
    g.d_head_mean = Eigen::MatrixXd::Zero(params.heads.mean_weights.rows(),
                                          params.heads.mean_weights.cols());
    g.d_head_log_scale = Eigen::MatrixXd::Zero(params.heads.log_scale_weights.rows(),
                                               params.heads.log_scale_weights.cols());
    g.mixture.d_prior_logits = Eigen::VectorXd::Zero(params.mixture.prior_logits.size());
    g.mixture.d_means =
        Eigen::MatrixXd::Zero(params.mixture.means.rows(), params.mixture.means.cols());
    g.mixture.d_log_vars = Eigen::MatrixXd::Zero(params.mixture.log_vars.rows(),
                                                 params.mixture.log_vars.cols());
    g.d_relations =
        Eigen::MatrixXd::Zero(params.kge.relations.rows(), params.kge.relations.cols());
    if (params.has_projection())
        g.d_projection =
            Eigen::MatrixXd::Zero(params.projection.rows(), params.projection.cols());
    return g;
}

TrainState init_train_state(const Problem& problem, const InitOptions& options) {
    if (problem.num_phrases() == 0) throw Error("trainer", "no phrases to train on");
    if (problem.weak_labels.labels.size() != std::size_t(problem.num_phrases()))
        throw Error("trainer", "weak labels do not cover the phrase table");

    const int d = static_cast<int>(problem.dim());
    TrainState state;
    state.seed = options.seed;
    state.weights = options.weights;
    state.optimizer = options.optimizer;

    const int width = options.net_hidden_width > 0 ? options.net_hidden_width : 2 * d;
    Rng net_rng(Rng::mix(options.seed, kSaltNetInit));
    state.params.net =
        NoiseNet(d, problem.schedule.steps(), width, options.net_hidden_layers, net_rng);

    state.params.heads.mean_weights = Eigen::MatrixXd::Identity(d, d);
    state.params.heads.log_scale_weights = Eigen::MatrixXd::Zero(d, d);

    // Mixture statistics over the noiseless initial latents, which under the
    // identity mean head are the mean-path inputs themselves.
    const Eigen::MatrixXd latents = mean_latents(state.params, mean_path_inputs(problem));
    state.params.mixture = init_mixture(problem.weak_labels, latents);

    const int kge_dim = options.kge_dim > 0 ? options.kge_dim : d;
    const auto num_relations =
        static_cast<Eigen::Index>(problem.corpus ? problem.corpus->relations.size() : 0);
    Rng rel_rng(Rng::mix(options.seed, kSaltRelationInit));
    state.params.kge.relations.resize(kge_dim, num_relations);
    for (Eigen::Index c = 0; c < num_relations; ++c)
        state.params.kge.relations.col(c) = 0.1 * rel_rng.gaussian_vector(kge_dim);
    state.params.kge.margin = options.transe_margin;
    state.params.kge.backend = options.backend;

    if (kge_dim != d) {
        Rng proj_rng(Rng::mix(options.seed, kSaltProjectionInit));
        const double bound = std::sqrt(6.0 / double(kge_dim + d));
        state.params.projection.resize(kge_dim, d);
        for (Eigen::Index r = 0; r < kge_dim; ++r)
            for (Eigen::Index c = 0; c < d; ++c)
                state.params.projection(r, c) = (2.0 * proj_rng.uniform01() - 1.0) * bound;
    }
    return state;
}

EpochContext draw_epoch_context(const TrainState& state, const Problem& problem,
                                int stage) {
    if (stage != 1 && stage != 2) throw Error("trainer", "stage must be 1 or 2");
    const Eigen::Index d = problem.dim();
    const Eigen::Index n = problem.num_phrases();
    const auto epoch = static_cast<std::uint64_t>(state.epoch);

    EpochContext ctx;
    if (problem.use_diffusion) {
        Rng chain(Rng::mix(state.seed, epoch, kSaltChainNoise));
        ctx.chain_noise.resize(d, n);
        for (Eigen::Index i = 0; i < n; ++i) ctx.chain_noise.col(i) = chain.gaussian_vector(d);

        Rng loss(Rng::mix(state.seed, epoch, kSaltLossDraws));
        ctx.loss_steps.resize(std::size_t(n));
        ctx.loss_noise.resize(d, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            ctx.loss_steps[std::size_t(i)] =
                1 + static_cast<int>(
                        loss.uniform_below(std::uint64_t(problem.schedule.steps())));
            ctx.loss_noise.col(i) = loss.gaussian_vector(d);
        }
    }
    Rng latent(Rng::mix(state.seed, epoch, kSaltLatentNoise));
    ctx.latent_noise.resize(d, n);
    for (Eigen::Index i = 0; i < n; ++i) ctx.latent_noise.col(i) = latent.gaussian_vector(d);

    if (stage == 2 && state.weights.kge != 0.0) {
        Rng neg(Rng::mix(state.seed, epoch, kSaltNegatives));
        ctx.negatives.reserve(problem.corpus->triples.size());
        for (const Triple& t : problem.corpus->triples)
            ctx.negatives.push_back(
                sample_negatives(t, problem.n_negatives, *problem.corpus, neg));

        // Freeze the canonical cluster choice on the noiseless path.
        const Eigen::MatrixXd latents = inference_latents(state, problem);
        ctx.canon_clusters.resize(std::size_t(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index c;
            posterior(latents.col(i), state.params.mixture).maxCoeff(&c);
            ctx.canon_clusters[std::size_t(i)] = static_cast<std::uint32_t>(c);
        }
    }
    return ctx;
}

LossReport compute_objective(const TrainState& state, const Problem& problem,
                             const EpochContext& ctx, int stage, Gradients* grads) {
    if (stage != 1 && stage != 2) throw Error("trainer", "stage must be 1 or 2");
    const Eigen::Index d = problem.dim();
    const Eigen::Index n = problem.num_phrases();
    if (n == 0) throw Error("trainer", "empty batch");
    const ModelParams& params = state.params;
    const LossWeights& w = state.weights;

    // Latent path: x is the noisy (or plain) input, omega the reparametrized
    // latent; scales are kept for the head backward pass.
    Eigen::MatrixXd x(d, n);
    const int t_final = problem.schedule.steps();
    for (Eigen::Index i = 0; i < n; ++i)
        x.col(i) = problem.use_diffusion
                       ? forward_marginal(problem.inputs.col(i), t_final, problem.schedule,
                                          ctx.chain_noise.col(i))
                       : problem.inputs.col(i);

    Eigen::MatrixXd omega(d, n), scales(d, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd scale;
        omega.col(i) = latent_from(x.col(i), params.heads, ctx.latent_noise.col(i), &scale);
        scales.col(i) = scale;
    }

    Eigen::MatrixXd d_omega = Eigen::MatrixXd::Zero(d, n);
    LossReport report;
    report.stage = stage;

    // Clustering term.
    if (grads) {
        report.clustering = clustering_loss_grad(omega, params.mixture, problem.weak_labels,
                                                 w.clustering, d_omega, grads->mixture);
    } else {
        report.clustering =
            clustering_loss(posterior_all(omega, params.mixture), problem.weak_labels);
    }
    check_finite(report.clustering, "clustering");

    // Side-information term.
    if (grads) {
        report.side = side_loss_grad(omega, problem.pairs, w.side, d_omega);
    } else {
        report.side = side_loss(omega, problem.pairs);
    }
    check_finite(report.side, "side");

    // Denoising term (skipped entirely when the chain is disabled).
    if (problem.use_diffusion) {
        NoiseNet::Grads scratch; // untouched at zero weight
        report.diffusion = diffusion_loss_grad(problem.inputs, ctx.loss_steps,
                                               ctx.loss_noise, params.net, problem.schedule,
                                               grads ? w.diffusion : 0.0,
                                               grads ? grads->net : scratch);
        check_finite(report.diffusion, "diffusion");
    }

    // Triple-scoring term.
    if (stage == 2 && w.kge != 0.0) {
        const Eigen::MatrixXd entities =
            canonical_entities(params, problem, ctx.canon_clusters, omega);
        KgeGrads kge_grads;
        if (grads) {
            kge_grads.d_entities = Eigen::MatrixXd::Zero(entities.rows(), entities.cols());
            kge_grads.d_relations = Eigen::MatrixXd::Zero(params.kge.relations.rows(),
                                                          params.kge.relations.cols());
        }
        report.kge =
            kge_loss_terms(problem.corpus->triples, ctx.negatives, entities, params.kge,
                           w.kge, grads ? &kge_grads : nullptr);
        check_finite(report.kge, "kge");

        if (grads) {
            grads->d_relations += kge_grads.d_relations;
            // Chain entity gradients back to their source.
            for (Eigen::Index i = 0; i < n; ++i) {
                const Eigen::VectorXd g = kge_grads.d_entities.col(i);
                if (g.isZero(0.0)) continue;
                Eigen::VectorXd g_source =
                    params.has_projection() ? (params.projection.transpose() * g).eval()
                                            : g;
                if (problem.canonical_source == CanonicalSource::cluster_mean) {
                    grads->mixture.d_means.col(ctx.canon_clusters[std::size_t(i)]) +=
                        g_source;
                    if (params.has_projection())
                        grads->d_projection +=
                            g *
                            params.mixture.means.col(ctx.canon_clusters[std::size_t(i)])
                                .transpose();
                } else {
                    d_omega.col(i) += g_source;
                    if (params.has_projection())
                        grads->d_projection += g * omega.col(i).transpose();
                }
            }
        }
    }

    // Head backward pass for every latent consumer accumulated above.
    if (grads) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd d_mean = d_omega.col(i);
            if (d_mean.isZero(0.0)) continue;
            const Eigen::VectorXd d_log_scale_pre =
                d_mean.cwiseProduct(ctx.latent_noise.col(i)).cwiseProduct(scales.col(i));
            grads->d_head_mean += x.col(i) * d_mean.transpose();
            grads->d_head_log_scale += x.col(i) * d_log_scale_pre.transpose();
        }
    }

    report.objective = w.clustering * report.clustering + w.diffusion * report.diffusion +
                       w.side * report.side;
    if (stage == 2) report.objective += w.kge * report.kge;
    check_finite(report.objective, "objective");
    return report;
}

Gradients compute_gradients(const TrainState& state, const Problem& problem,
                            const EpochContext& ctx, int stage) {
    Gradients grads = zero_gradients(state.params);
    compute_objective(state, problem, ctx, stage, &grads);
    return grads;
}

void stage_one(TrainState& state, const Problem& problem, const StageSettings& settings,
               std::vector<LossReport>& log) {
    run_stage(state, problem, settings, 1, log);
}

void stage_two(TrainState& state, const Problem& problem, const StageSettings& settings,
               std::vector<LossReport>& log) {
    run_stage(state, problem, settings, 2, log);
}

Eigen::MatrixXd inference_latents(const TrainState& state, const Problem& problem) {
    return mean_latents(state.params, mean_path_inputs(problem));
}

ClusterAssignment infer_clusters(const TrainState& state, const Problem& problem) {
    const Eigen::MatrixXd latents = inference_latents(state, problem);
    const Eigen::Index n = latents.cols();
    const auto k = static_cast<std::uint32_t>(state.params.mixture.k());

    std::vector<std::uint32_t> raw(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index c;
        posterior(latents.col(i), state.params.mixture).maxCoeff(&c);
        raw[std::size_t(i)] = static_cast<std::uint32_t>(c);
    }

    // Drop empty clusters, keeping index order.
    std::vector<std::uint32_t> remap(k, UINT32_MAX);
    std::uint32_t next = 0;
    for (std::uint32_t c = 0; c < k; ++c) {
        for (auto label : raw) {
            if (label == c) {
                remap[c] = next++;
                break;
            }
        }
    }
    ClusterAssignment out;
    out.k = next;
    out.labels.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out.labels[i] = remap[raw[i]];
    return out;
}

namespace {

void write_bytes(std::ofstream& out, const void* data, std::size_t bytes) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void read_bytes(std::ifstream& in, void* data, std::size_t bytes) {
    if (!in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes)))
        throw Error("trainer", "truncated checkpoint");
}

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
    const std::int64_t rows = m.rows(), cols = m.cols();
    write_bytes(out, &rows, sizeof rows);
    write_bytes(out, &cols, sizeof cols);
    write_bytes(out, m.data(), sizeof(double) * std::size_t(m.size()));
}

Eigen::MatrixXd read_matrix(std::ifstream& in) {
    std::int64_t rows = 0, cols = 0;
    read_bytes(in, &rows, sizeof rows);
    read_bytes(in, &cols, sizeof cols);
    if (rows < 0 || cols < 0 || rows * cols > (std::int64_t(1) << 32))
        throw Error("trainer", "corrupt checkpoint matrix header");
    Eigen::MatrixXd m(rows, cols);
    read_bytes(in, m.data(), sizeof(double) * std::size_t(m.size()));
    return m;
}

void write_vector(std::ofstream& out, const Eigen::VectorXd& v) {
    write_matrix(out, v);
}

Eigen::VectorXd read_vector(std::ifstream& in) {
    Eigen::MatrixXd m = read_matrix(in);
    if (m.cols() != 1 && m.size() != 0)
        throw Error("trainer", "corrupt checkpoint vector");
    return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(m.data(), m.size()));
}

constexpr std::uint32_t kCheckpointMagic = 0x4f4b434e; // "OKCN"
constexpr std::uint32_t kCheckpointVersion = 1;

} // namespace

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("trainer", "cannot write checkpoint: " + path.string());

    write_bytes(out, &kCheckpointMagic, sizeof kCheckpointMagic);
    write_bytes(out, &kCheckpointVersion, sizeof kCheckpointVersion);
    write_bytes(out, &state.seed, sizeof state.seed);
    const std::int32_t epoch = state.epoch;
    write_bytes(out, &epoch, sizeof epoch);
    const std::uint8_t opt = state.optimizer == OptimizerKind::adam ? 1 : 0;
    write_bytes(out, &opt, sizeof opt);
    write_bytes(out, &state.weights, sizeof state.weights);

    const ModelParams& p = state.params;
    const std::int32_t layers = static_cast<std::int32_t>(p.net.weights.size());
    const std::int32_t data_dim = p.net.data_dim();
    const std::int32_t time_steps = p.net.time_steps();
    write_bytes(out, &layers, sizeof layers);
    write_bytes(out, &data_dim, sizeof data_dim);
    write_bytes(out, &time_steps, sizeof time_steps);
    for (std::int32_t l = 0; l < layers; ++l) {
        write_matrix(out, p.net.weights[std::size_t(l)]);
        write_vector(out, p.net.biases[std::size_t(l)]);
    }
    write_matrix(out, p.heads.mean_weights);
    write_matrix(out, p.heads.log_scale_weights);
    write_vector(out, p.mixture.prior_logits);
    write_matrix(out, p.mixture.means);
    write_matrix(out, p.mixture.log_vars);
    write_matrix(out, p.kge.relations);
    write_bytes(out, &p.kge.margin, sizeof p.kge.margin);
    const std::uint8_t backend = p.kge.backend == KgeBackend::transe ? 1 : 0;
    write_bytes(out, &backend, sizeof backend);
    write_matrix(out, p.projection);

    const std::int64_t adam_blocks = static_cast<std::int64_t>(state.adam.m.size());
    write_bytes(out, &adam_blocks, sizeof adam_blocks);
    write_bytes(out, &state.adam.step, sizeof state.adam.step);
    for (std::int64_t b = 0; b < adam_blocks; ++b) {
        write_vector(out, state.adam.m[std::size_t(b)]);
        write_vector(out, state.adam.v[std::size_t(b)]);
    }
    if (!out) throw Error("trainer", "checkpoint write failed: " + path.string());
}

TrainState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("trainer", "cannot open checkpoint: " + path.string());

    std::uint32_t magic = 0, version = 0;
    read_bytes(in, &magic, sizeof magic);
    read_bytes(in, &version, sizeof version);
    if (magic != kCheckpointMagic) throw Error("trainer", "not a checkpoint file");
    if (version != kCheckpointVersion)
        throw Error("trainer", "unsupported checkpoint version " + std::to_string(version));

    TrainState state;
    read_bytes(in, &state.seed, sizeof state.seed);
    std::int32_t epoch = 0;
    read_bytes(in, &epoch, sizeof epoch);
    state.epoch = epoch;
    std::uint8_t opt = 0;
    read_bytes(in, &opt, sizeof opt);
    state.optimizer = opt ? OptimizerKind::adam : OptimizerKind::sgd;
    read_bytes(in, &state.weights, sizeof state.weights);

    std::int32_t layers = 0, data_dim = 0, time_steps = 0;
    read_bytes(in, &layers, sizeof layers);
    read_bytes(in, &data_dim, sizeof data_dim);
    read_bytes(in, &time_steps, sizeof time_steps);
    if (layers < 1 || layers > 64) throw Error("trainer", "corrupt checkpoint net header");
    Rng dummy(0);
    state.params.net = NoiseNet(data_dim, time_steps, 1, 0, dummy);
    state.params.net.weights.clear();
    state.params.net.biases.clear();
    for (std::int32_t l = 0; l < layers; ++l) {
        state.params.net.weights.push_back(read_matrix(in));
        state.params.net.biases.push_back(read_vector(in));
    }
    state.params.heads.mean_weights = read_matrix(in);
    state.params.heads.log_scale_weights = read_matrix(in);
    state.params.mixture.prior_logits = read_vector(in);
    state.params.mixture.means = read_matrix(in);
    state.params.mixture.log_vars = read_matrix(in);
    state.params.kge.relations = read_matrix(in);
    read_bytes(in, &state.params.kge.margin, sizeof state.params.kge.margin);
    std::uint8_t backend = 0;
    read_bytes(in, &backend, sizeof backend);
    state.params.kge.backend = backend ? KgeBackend::transe : KgeBackend::hole;
    state.params.projection = read_matrix(in);

    std::int64_t adam_blocks = 0;
    read_bytes(in, &adam_blocks, sizeof adam_blocks);
    read_bytes(in, &state.adam.step, sizeof state.adam.step);
    for (std::int64_t b = 0; b < adam_blocks; ++b) {
        state.adam.m.push_back(read_vector(in));
        state.adam.v.push_back(read_vector(in));
    }
    return state;
}

} // namespace okcanon
