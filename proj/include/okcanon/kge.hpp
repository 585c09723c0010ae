#pragma once

#include <vector>

#include <Eigen/Core>

#include "okcanon/corpus.hpp"
#include "okcanon/rng.hpp"

namespace okcanon {

enum class KgeBackend { hole, transe };

struct KgeParams {
    Eigen::MatrixXd relations; // dim x R
    double margin = 1.0;       // translational backend only
    KgeBackend backend = KgeBackend::hole;
};

// Circular correlation out[k] = sum_i a[i] * b[(k+i) mod d]. The generic
// entry point dispatches to an FFT fast path for large d; both paths agree
// to floating-point accuracy.
Eigen::VectorXd circular_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
Eigen::VectorXd circular_correlation_direct(const Eigen::VectorXd& a,
                                            const Eigen::VectorXd& b);
Eigen::VectorXd circular_correlation_fft(const Eigen::VectorXd& a,
                                         const Eigen::VectorXd& b);

// Circular convolution out[k] = sum_i a[i] * b[(k-i) mod d]; used by the
// gradient of the correlation-based score.
Eigen::VectorXd circular_convolution(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Triple scores; higher is better for both backends.
double hole_score(const Eigen::VectorXd& h, const Eigen::VectorXd& r,
                  const Eigen::VectorXd& t); // sigmoid(r . corr(h, t))
double transe_score(const Eigen::VectorXd& h, const Eigen::VectorXd& r,
                    const Eigen::VectorXd& t); // -||h + r - t||

// Draws n corrupted triples, each replacing head or tail (coin flip) with a
// uniformly chosen phrase. A corruption must differ from the original and
// avoid the corpus triple set; after a bounded number of retries any
// differing triple is accepted.
std::vector<Triple> sample_negatives(const Triple& triple, int n, const Corpus& corpus,
                                     Rng& rng);

struct KgeGrads {
    Eigen::MatrixXd d_entities;  // dim x n_phrases
    Eigen::MatrixXd d_relations; // dim x R
};

// Ranking loss over the given positives and their negative lists.
// Correlation backend: mean softplus(-raw) over positives plus softplus(raw)
// over negatives, raw = r . corr(h, t). Translational backend: mean
// max(0, margin + d_pos - d_neg). Accumulates weight-scaled gradients when
// `grads` is non-null. `entities` is column-per-phrase.
double kge_loss_terms(const std::vector<Triple>& positives,
                      const std::vector<std::vector<Triple>>& negatives,
                      const Eigen::MatrixXd& entities, const KgeParams& params,
                      double weight, KgeGrads* grads);

// Spec-level surface: samples n_neg negatives per corpus triple, then scores.
double kge_loss(const Corpus& corpus, const Eigen::MatrixXd& entities,
                const KgeParams& params, int n_neg, Rng& rng);

} // namespace okcanon
