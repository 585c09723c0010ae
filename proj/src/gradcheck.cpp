#include "okcanon/gradcheck.hpp"

#include <cmath>

#include "okcanon/error.hpp"
#include "okcanon/hac.hpp"

namespace okcanon {

GradcheckProblem make_gradcheck_problem(std::uint64_t seed) {
    constexpr int kPhrases = 20;
    constexpr int kTriples = 10;
    constexpr int kRelations = 4;
    constexpr int kBlobs = 3;
    constexpr int kDim = 8;

    GradcheckProblem out;
    out.corpus = std::make_unique<Corpus>();
    Corpus& corpus = *out.corpus;
    for (int i = 0; i < kPhrases; ++i) corpus.phrases.intern("p" + std::to_string(i));
    for (int r = 0; r < kRelations; ++r) corpus.relations.intern("r" + std::to_string(r));

    Rng rng(Rng::mix(seed, 0x70));
    while (corpus.triples.size() < kTriples) {
        Triple t{static_cast<NounPhraseId>(rng.uniform_below(kPhrases)),
                 static_cast<RelationId>(rng.uniform_below(kRelations)),
                 static_cast<NounPhraseId>(rng.uniform_below(kPhrases))};
        if (t.head == t.tail) continue;
        if (std::find(corpus.triples.begin(), corpus.triples.end(), t) !=
            corpus.triples.end())
            continue;
        corpus.triples.push_back(t);
    }
    corpus.index_triples();

    // Clouds separated enough for the initialization to recover exactly three
    // clusters, but overlapping enough that posteriors stay soft and the
    // clustering gradients are non-trivial.
    Eigen::MatrixXd centers(kDim, kBlobs);
    for (int b = 0; b < kBlobs; ++b) centers.col(b) = 2.0 * rng.gaussian_vector(kDim);
    Eigen::MatrixXd inputs(kDim, kPhrases);
    for (int i = 0; i < kPhrases; ++i)
        inputs.col(i) = centers.col(i % kBlobs) + 0.6 * rng.gaussian_vector(kDim);

    Problem& problem = out.problem;
    problem.corpus = out.corpus.get();
    problem.inputs = inputs;
    problem.schedule = make_schedule(2, 1e-4, 0.02);
    problem.weak_labels = hac_cluster(inputs, Linkage::complete, 0.45);
    if (problem.weak_labels.k != kBlobs)
        throw Error("gradcheck", "toy problem did not initialize to " +
                                     std::to_string(kBlobs) + " clusters (got " +
                                     std::to_string(problem.weak_labels.k) + ")");

    // A few candidate pairs with mixed scores keep the side term non-trivial.
    CandidatePairs pairs;
    for (int i = 0; i < 6; ++i) {
        auto a = static_cast<NounPhraseId>(rng.uniform_below(kPhrases));
        auto b = static_cast<NounPhraseId>(rng.uniform_below(kPhrases));
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        pairs.entries.push_back({a, b, PairSource::idf, 0.25 + 0.75 * rng.uniform01()});
    }
    std::sort(pairs.entries.begin(), pairs.entries.end(),
              [](const CandidatePair& x, const CandidatePair& y) {
                  return std::tie(x.a, x.b) < std::tie(y.a, y.b);
              });
    problem.pairs = pairs;
    problem.n_negatives = 5;
    return out;
}

double max_fd_relative_error(const TrainState& state, const Problem& problem, int stage,
                             double eps) {
    const EpochContext ctx = draw_epoch_context(state, problem, stage);

    TrainState work = state;
    Gradients analytic = compute_gradients(work, problem, ctx, stage);

    double worst = 0.0;
    visit_blocks(work.params, analytic, [&](double* p, double* g, Eigen::Index n) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double saved = p[i];
            p[i] = saved + eps;
            const double up = compute_objective(work, problem, ctx, stage, nullptr).objective;
            p[i] = saved - eps;
            const double down =
                compute_objective(work, problem, ctx, stage, nullptr).objective;
            p[i] = saved;
            const double fd = (up - down) / (2.0 * eps);
            const double denom = std::max({std::abs(fd), std::abs(g[i]), 1e-6});
            worst = std::max(worst, std::abs(fd - g[i]) / denom);
        }
    });
    return worst;
}

std::vector<GradCheckRow> run_gradient_checks(std::uint64_t seed, double eps) {
    GradcheckProblem toy = make_gradcheck_problem(seed);

    auto state_with = [&](LossWeights w, KgeBackend backend) {
        InitOptions options;
        options.seed = seed;
        options.weights = w;
        options.backend = backend;
        return init_train_state(toy.problem, options);
    };

    std::vector<GradCheckRow> rows;
    auto check = [&](const std::string& name, LossWeights w, KgeBackend backend,
                     int stage) {
        TrainState state = state_with(w, backend);
        rows.push_back({name, max_fd_relative_error(state, toy.problem, stage, eps)});
    };

    check("diffusion", {0, 1, 0, 0}, KgeBackend::hole, 1);
    check("clustering", {1, 0, 0, 0}, KgeBackend::hole, 1);
    check("side", {0, 0, 0, 1}, KgeBackend::hole, 1);
    check("kge_hole", {0, 0, 1, 0}, KgeBackend::hole, 2);
    check("kge_transe", {0, 0, 1, 0}, KgeBackend::transe, 2);
    check("stage1", {1.0, 0.6, 1.0, 1.0}, KgeBackend::hole, 1);
    check("stage2", {1.0, 0.6, 1.0, 1.0}, KgeBackend::hole, 2);
    return rows;
}

} // namespace okcanon
