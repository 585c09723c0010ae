#pragma once

#include <Eigen/Core>

#include "okcanon/assignment.hpp"

namespace okcanon {

// Diagonal Gaussian mixture over clustering latents. Priors are kept as
// trainable logits (softmax-normalized on read) and variances as trainable
// log-values so positivity and normalization survive gradient descent.
struct MixtureParams {
    static constexpr double kVarianceFloor = 1e-4;

    Eigen::VectorXd prior_logits; // K
    Eigen::MatrixXd means;        // dim x K
    Eigen::MatrixXd log_vars;     // dim x K

    Eigen::Index k() const { return prior_logits.size(); }
    Eigen::Index dim() const { return means.rows(); }

    Eigen::VectorXd priors() const;    // softmax(prior_logits), sums to 1
    Eigen::MatrixXd variances() const; // exp(log_vars)
};

// Gradient block for the mixture parameters, laid out like MixtureParams.
struct MixtureGrads {
    Eigen::VectorXd d_prior_logits;
    Eigen::MatrixXd d_means;
    Eigen::MatrixXd d_log_vars;
};

// Fits per-cluster statistics of `latents` (column-per-phrase) under the
// given hard assignment: priors from cluster shares, means and per-dimension
// variances from members, variances floored (singletons land on the floor).
MixtureParams init_mixture(const ClusterAssignment& assignment,
                           const Eigen::MatrixXd& latents);

// Soft assignment of one latent: v(c) proportional to prior(c) times the
// diagonal-Gaussian density, normalized. Computed in log space with
// max-subtraction.
Eigen::VectorXd posterior(const Eigen::VectorXd& latent, const MixtureParams& params);

// Posteriors for every column of `latents`, one column per phrase (K x n).
Eigen::MatrixXd posterior_all(const Eigen::MatrixXd& latents, const MixtureParams& params);

// Cross-entropy between posteriors (K x n) and the weak labels; posteriors
// are clamped below at 1e-12 before the log.
double clustering_loss(const Eigen::MatrixXd& posteriors, const ClusterAssignment& weak);

// Loss plus gradients: accumulates weight-scaled gradients with respect to
// the latents and every mixture parameter. Returns the same value as
// clustering_loss(posterior_all(latents, params), weak).
double clustering_loss_grad(const Eigen::MatrixXd& latents, const MixtureParams& params,
                            const ClusterAssignment& weak, double weight,
                            Eigen::MatrixXd& d_latents, MixtureGrads& grads);

} // namespace okcanon
