#include "okcanon/mixture.hpp"

#include <cmath>

#include "okcanon/error.hpp"

namespace okcanon {

namespace {

constexpr double kPosteriorClamp = 1e-12;
constexpr double kLog2Pi = 1.8378770664093453; // log(2*pi)

// Log of prior(c) * N(latent; mean_c, diag var_c) for every cluster.
Eigen::VectorXd log_joint(const Eigen::VectorXd& latent, const MixtureParams& p) {
    const Eigen::Index k = p.k();
    const Eigen::VectorXd log_priors =
        p.prior_logits.array() -
        (std::log((p.prior_logits.array() - p.prior_logits.maxCoeff()).exp().sum()) +
         p.prior_logits.maxCoeff());
    Eigen::VectorXd out(k);
    for (Eigen::Index c = 0; c < k; ++c) {
        const auto mean = p.means.col(c).array();
        const auto log_var = p.log_vars.col(c).array();
        const auto diff = latent.array() - mean;
        const double quad = (diff.square() * (-log_var).exp()).sum();
        const double norm = (log_var + kLog2Pi).sum();
        out(c) = log_priors(c) - 0.5 * (quad + norm);
    }
    return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
    const double m = x.maxCoeff();
    Eigen::VectorXd e = (x.array() - m).exp();
    return e / e.sum();
}

} // namespace

Eigen::VectorXd MixtureParams::priors() const { return softmax(prior_logits); }

Eigen::MatrixXd MixtureParams::variances() const { return log_vars.array().exp(); }

MixtureParams init_mixture(const ClusterAssignment& assignment,
                           const Eigen::MatrixXd& latents) {
    if (assignment.labels.empty() || assignment.k == 0)
        throw Error("mixture", "init_mixture: empty assignment");
    if (static_cast<std::size_t>(latents.cols()) != assignment.labels.size())
        throw Error("mixture", "init_mixture: latent count does not match assignment");

    const Eigen::Index k = assignment.k;
    const Eigen::Index d = latents.rows();
    const Eigen::Index n = latents.cols();

    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(d, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto c = assignment.labels[static_cast<std::size_t>(i)];
        counts(c) += 1.0;
        means.col(c) += latents.col(i);
    }
    for (Eigen::Index c = 0; c < k; ++c) {
        if (counts(c) == 0.0)
            throw Error("mixture", "init_mixture: empty cluster " + std::to_string(c));
        means.col(c) /= counts(c);
    }

    Eigen::MatrixXd vars = Eigen::MatrixXd::Zero(d, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto c = assignment.labels[static_cast<std::size_t>(i)];
        vars.col(c) += (latents.col(i) - means.col(c)).array().square().matrix();
    }

    MixtureParams params;
    params.means = means;
    params.log_vars.resize(d, k);
    for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::ArrayXd v = vars.col(c).array() / counts(c);
        params.log_vars.col(c) =
            v.max(MixtureParams::kVarianceFloor).log().matrix();
    }
    // priors() applies softmax, so store log-shares.
    params.prior_logits = (counts / double(n)).array().log().matrix();
    return params;
}

Eigen::VectorXd posterior(const Eigen::VectorXd& latent, const MixtureParams& params) {
    if (latent.size() != params.dim())
        throw Error("mixture", "posterior: latent dimension mismatch");
    Eigen::VectorXd lj = log_joint(latent, params);
    if (!lj.allFinite()) throw Error("mixture", "posterior: non-finite log density");
    return softmax(lj);
}

Eigen::MatrixXd posterior_all(const Eigen::MatrixXd& latents, const MixtureParams& params) {
    Eigen::MatrixXd out(params.k(), latents.cols());
    for (Eigen::Index i = 0; i < latents.cols(); ++i)
        out.col(i) = posterior(latents.col(i), params);
    return out;
}

double clustering_loss(const Eigen::MatrixXd& posteriors, const ClusterAssignment& weak) {
    const Eigen::Index n = posteriors.cols();
    if (static_cast<std::size_t>(n) != weak.labels.size())
        throw Error("mixture", "clustering_loss: posterior count does not match labels");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto y = weak.labels[static_cast<std::size_t>(i)];
        if (y >= posteriors.rows())
            throw Error("mixture", "clustering_loss: label out of range");
        sum -= std::log(std::max(posteriors(y, i), kPosteriorClamp));
    }
    return sum / double(n);
}

double clustering_loss_grad(const Eigen::MatrixXd& latents, const MixtureParams& params,
                            const ClusterAssignment& weak, double weight,
                            Eigen::MatrixXd& d_latents, MixtureGrads& grads) {
    const Eigen::Index n = latents.cols();
    const Eigen::Index k = params.k();
    if (static_cast<std::size_t>(n) != weak.labels.size())
        throw Error("mixture", "clustering_loss_grad: latent count does not match labels");

    const Eigen::MatrixXd vars = params.variances();
    double loss = 0.0;

    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd lj = log_joint(latents.col(i), params);
        if (!lj.allFinite())
            throw Error("mixture", "clustering_loss_grad: non-finite log density");
        const Eigen::VectorXd v = softmax(lj);
        const auto y = weak.labels[static_cast<std::size_t>(i)];
        if (y >= k) throw Error("mixture", "clustering_loss_grad: label out of range");

        loss -= std::log(std::max(v(y), kPosteriorClamp));
        if (v(y) <= kPosteriorClamp) continue; // clamped term: flat in the parameters

        // d(-log v_y)/d(log-joint_c) = v_c - [c == y]; the softmax part of the
        // prior logits cancels because these rows sum to zero.
        for (Eigen::Index c = 0; c < k; ++c) {
            const double dl = weight * (v(c) - (c == y ? 1.0 : 0.0)) / double(n);
            if (dl == 0.0) continue;
            grads.d_prior_logits(c) += dl;

            const auto diff = (latents.col(i) - params.means.col(c)).array();
            const auto inv_var = vars.col(c).array().inverse();
            // log N = -0.5 * (sum(diff^2 / var) + sum(log var) + d*log 2pi)
            Eigen::ArrayXd d_latent = dl * (-(diff * inv_var));
            d_latents.col(i) += d_latent.matrix();
            grads.d_means.col(c) += (dl * (diff * inv_var)).matrix();
            // d/d(log var) = -0.5*(1 - diff^2/var)
            grads.d_log_vars.col(c) +=
                (dl * (-0.5) * (1.0 - diff.square() * inv_var)).matrix();
        }
    }
    return loss / double(n);
}

} // namespace okcanon
