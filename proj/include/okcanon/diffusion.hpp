#pragma once

#include <vector>

#include <Eigen/Core>

#include "okcanon/rng.hpp"

namespace okcanon {

// Variance schedule over the forward noising chain: beta_t in (0, 1),
// alpha_t = 1 - beta_t, alpha_bar_t = prod_{s<=t} alpha_s. Index 0 of each
// vector holds step t = 1.
struct NoiseSchedule {
    Eigen::VectorXd beta;
    Eigen::VectorXd alpha;
    Eigen::VectorXd alpha_bar;

    int steps() const { return static_cast<int>(beta.size()); }
};

// Linear beta schedule from beta_start to beta_end over t_steps steps.
NoiseSchedule make_schedule(int t_steps, double beta_start, double beta_end);

// Noise-prediction MLP. Input is the noisy vector concatenated with a
// one-hot step encoding; hidden layers use tanh, the output layer is linear
// and matches the data dimension.
class NoiseNet {
public:
    NoiseNet() = default;
    NoiseNet(int data_dim, int time_steps, int hidden_width, int hidden_layers,
             Rng& rng);

    Eigen::VectorXd predict(const Eigen::VectorXd& x, int t) const;

    struct Workspace {
        std::vector<Eigen::VectorXd> inputs; // activation entering each layer
    };
    Eigen::VectorXd predict(const Eigen::VectorXd& x, int t, Workspace& ws) const;

    struct Grads {
        std::vector<Eigen::MatrixXd> d_weights;
        std::vector<Eigen::VectorXd> d_biases;
    };
    Grads zero_grads() const;
    // Accumulates parameter gradients for one sample given d(loss)/d(output).
    void backward(const Workspace& ws, const Eigen::VectorXd& d_out, Grads& grads) const;

    int data_dim() const { return data_dim_; }
    int time_steps() const { return time_steps_; }

    std::vector<Eigen::MatrixXd> weights; // layer l: out x in
    std::vector<Eigen::VectorXd> biases;

private:
    int data_dim_ = 0;
    int time_steps_ = 0;
};

// Square head matrices mapping the final noisy state to the latent's mean
// and log-scale (applied as x^T W).
struct LatentHeads {
    Eigen::MatrixXd mean_weights;      // d x d
    Eigen::MatrixXd log_scale_weights; // d x d
};

// One forward noising step: sqrt(alpha_t) x + sqrt(1 - alpha_t) z with
// z ~ N(0, I). t is 1-based.
Eigen::VectorXd forward_step(const Eigen::VectorXd& x_prev, int t,
                             const NoiseSchedule& schedule, Rng& rng);

// Closed-form marginal of t forward steps given the aggregate noise draw:
// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
Eigen::VectorXd forward_marginal(const Eigen::VectorXd& x0, int t,
                                 const NoiseSchedule& schedule,
                                 const Eigen::VectorXd& eps);

// Latent sample from the heads: mean + scale ∘ z0 where mean = x^T W_mu and
// scale = exp(x^T W_sigma). Throws when a log-scale component exceeds 30
// (exp would overflow; training has diverged). Pass scale_out to retrieve
// the scale used.
Eigen::VectorXd latent_from(const Eigen::VectorXd& x, const LatentHeads& heads,
                            const Eigen::VectorXd& z0,
                            Eigen::VectorXd* scale_out = nullptr);

// Convenience wrapper drawing z0 from rng.
Eigen::VectorXd sample_latent(const Eigen::VectorXd& x, const LatentHeads& heads,
                              Rng& rng);

// One reverse step: x/sqrt(alpha_t) - (sqrt(1-alpha_t)/sqrt(alpha_t)) f(x, t) + z2.
Eigen::VectorXd reverse_step(const Eigen::VectorXd& x_t, int t, const NoiseNet& net,
                             const NoiseSchedule& schedule, Rng& rng);
// Deterministic variant with z2 = 0.
Eigen::VectorXd reverse_step_mean(const Eigen::VectorXd& x_t, int t, const NoiseNet& net,
                                  const NoiseSchedule& schedule);

// Mean over columns of ||f - net(x_t, t)||^2 where x_t is the closed-form
// marginal of x0 under the drawn (t, f). Draws one (t, f) per column.
double diffusion_loss(const Eigen::MatrixXd& x0, const NoiseNet& net,
                      const NoiseSchedule& schedule, Rng& rng);

// Same loss for frozen draws, accumulating weight-scaled net gradients.
double diffusion_loss_grad(const Eigen::MatrixXd& x0, const std::vector<int>& ts,
                           const Eigen::MatrixXd& noise, const NoiseNet& net,
                           const NoiseSchedule& schedule, double weight,
                           NoiseNet::Grads& grads);

} // namespace okcanon
