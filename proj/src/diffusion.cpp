#include "okcanon/diffusion.hpp"

#include <cmath>

#include "okcanon/error.hpp"

namespace okcanon {

NoiseSchedule make_schedule(int t_steps, double beta_start, double beta_end) {
    if (t_steps < 1) throw Error("diffusion", "schedule needs at least one step");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw Error("diffusion", "schedule bounds must satisfy 0 < start <= end < 1");

    NoiseSchedule s;
    s.beta.resize(t_steps);
    if (t_steps == 1) {
        s.beta(0) = beta_start;
    } else {
        for (int t = 0; t < t_steps; ++t)
            s.beta(t) = beta_start + (beta_end - beta_start) * double(t) / double(t_steps - 1);
    }
    s.alpha = 1.0 - s.beta.array();
    s.alpha_bar.resize(t_steps);
    double prod = 1.0;
    for (int t = 0; t < t_steps; ++t) {
        prod *= s.alpha(t);
        s.alpha_bar(t) = prod;
    }
    return s;
}

NoiseNet::NoiseNet(int data_dim, int time_steps, int hidden_width, int hidden_layers,
                   Rng& rng)
    : data_dim_(data_dim), time_steps_(time_steps) {
    if (data_dim < 1 || time_steps < 1 || hidden_width < 1 || hidden_layers < 0)
        throw Error("diffusion", "invalid noise-net shape");

    std::vector<int> widths;
    widths.push_back(data_dim + time_steps);
    for (int l = 0; l < hidden_layers; ++l) widths.push_back(hidden_width);
    widths.push_back(data_dim);

    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const int in = widths[l], out = widths[l + 1];
        const double bound = std::sqrt(6.0 / double(in + out));
        Eigen::MatrixXd w(out, in);
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c) w(r, c) = (2.0 * rng.uniform01() - 1.0) * bound;
        weights.push_back(std::move(w));
        biases.push_back(Eigen::VectorXd::Zero(out));
    }
}

Eigen::VectorXd NoiseNet::predict(const Eigen::VectorXd& x, int t) const {
    Workspace ws;
    return predict(x, t, ws);
}

Eigen::VectorXd NoiseNet::predict(const Eigen::VectorXd& x, int t, Workspace& ws) const {
    if (x.size() != data_dim_) throw Error("diffusion", "noise-net input dimension mismatch");
    if (t < 1 || t > time_steps_) throw Error("diffusion", "noise-net step out of range");

    Eigen::VectorXd a(data_dim_ + time_steps_);
    a.head(data_dim_) = x;
    a.tail(time_steps_).setZero();
    a(data_dim_ + t - 1) = 1.0;

    ws.inputs.clear();
    for (std::size_t l = 0; l < weights.size(); ++l) {
        ws.inputs.push_back(a);
        Eigen::VectorXd z = weights[l] * a + biases[l];
        a = (l + 1 < weights.size()) ? z.array().tanh().matrix() : z;
    }
    return a;
}

NoiseNet::Grads NoiseNet::zero_grads() const {
    Grads g;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        g.d_weights.push_back(Eigen::MatrixXd::Zero(weights[l].rows(), weights[l].cols()));
        g.d_biases.push_back(Eigen::VectorXd::Zero(biases[l].size()));
    }
    return g;
}

void NoiseNet::backward(const Workspace& ws, const Eigen::VectorXd& d_out,
                        Grads& grads) const {
    Eigen::VectorXd delta = d_out;
    for (std::size_t l = weights.size(); l-- > 0;) {
        grads.d_weights[l] += delta * ws.inputs[l].transpose();
        grads.d_biases[l] += delta;
        if (l == 0) break;
        // Propagate through the previous tanh: ws.inputs[l] is its output.
        Eigen::VectorXd upstream = weights[l].transpose() * delta;
        delta = (upstream.array() * (1.0 - ws.inputs[l].array().square())).matrix();
    }
}

Eigen::VectorXd forward_step(const Eigen::VectorXd& x_prev, int t,
                             const NoiseSchedule& schedule, Rng& rng) {
    if (t < 1 || t > schedule.steps())
        throw Error("diffusion", "forward step index out of range");
    const double a = schedule.alpha(t - 1);
    return std::sqrt(a) * x_prev + std::sqrt(1.0 - a) * rng.gaussian_vector(x_prev.size());
}

Eigen::VectorXd forward_marginal(const Eigen::VectorXd& x0, int t,
                                 const NoiseSchedule& schedule,
                                 const Eigen::VectorXd& eps) {
    if (t < 1 || t > schedule.steps())
        throw Error("diffusion", "marginal step index out of range");
    const double ab = schedule.alpha_bar(t - 1);
    return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

Eigen::VectorXd latent_from(const Eigen::VectorXd& x, const LatentHeads& heads,
                            const Eigen::VectorXd& z0, Eigen::VectorXd* scale_out) {
    Eigen::VectorXd mean = heads.mean_weights.transpose() * x;
    Eigen::VectorXd log_scale = heads.log_scale_weights.transpose() * x;
    if ((log_scale.array() > 30.0).any())
        throw Error("diffusion", "latent log-scale exceeds 30; training diverged");
    Eigen::VectorXd scale = log_scale.array().exp();
    if (scale_out) *scale_out = scale;
    return mean + scale.cwiseProduct(z0);
}

Eigen::VectorXd sample_latent(const Eigen::VectorXd& x, const LatentHeads& heads,
                              Rng& rng) {
    return latent_from(x, heads, rng.gaussian_vector(x.size()));
}

Eigen::VectorXd reverse_step(const Eigen::VectorXd& x_t, int t, const NoiseNet& net,
                             const NoiseSchedule& schedule, Rng& rng) {
    return reverse_step_mean(x_t, t, net, schedule) + rng.gaussian_vector(x_t.size());
}

Eigen::VectorXd reverse_step_mean(const Eigen::VectorXd& x_t, int t, const NoiseNet& net,
                                  const NoiseSchedule& schedule) {
    if (t < 1 || t > schedule.steps())
        throw Error("diffusion", "reverse step index out of range");
    const double a = schedule.alpha(t - 1);
    const double inv_sqrt_a = 1.0 / std::sqrt(a);
    return inv_sqrt_a * x_t - (std::sqrt(1.0 - a) * inv_sqrt_a) * net.predict(x_t, t);
}

double diffusion_loss(const Eigen::MatrixXd& x0, const NoiseNet& net,
                      const NoiseSchedule& schedule, Rng& rng) {
    if (x0.cols() == 0) throw Error("diffusion", "diffusion_loss: empty batch");
    std::vector<int> ts(static_cast<std::size_t>(x0.cols()));
    Eigen::MatrixXd noise(x0.rows(), x0.cols());
    for (Eigen::Index i = 0; i < x0.cols(); ++i) {
        ts[static_cast<std::size_t>(i)] =
            1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(schedule.steps())));
        noise.col(i) = rng.gaussian_vector(x0.rows());
    }
    NoiseNet::Grads unused = net.zero_grads();
    return diffusion_loss_grad(x0, ts, noise, net, schedule, 0.0, unused);
}

double diffusion_loss_grad(const Eigen::MatrixXd& x0, const std::vector<int>& ts,
                           const Eigen::MatrixXd& noise, const NoiseNet& net,
                           const NoiseSchedule& schedule, double weight,
                           NoiseNet::Grads& grads) {
    const Eigen::Index n = x0.cols();
    if (n == 0) throw Error("diffusion", "diffusion_loss: empty batch");
    if (ts.size() != static_cast<std::size_t>(n) || noise.cols() != n)
        throw Error("diffusion", "diffusion_loss: draw count mismatch");

    double loss = 0.0;
    NoiseNet::Workspace ws;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int t = ts[static_cast<std::size_t>(i)];
        const Eigen::VectorXd x_t = forward_marginal(x0.col(i), t, schedule, noise.col(i));
        const Eigen::VectorXd pred = net.predict(x_t, t, ws);
        const Eigen::VectorXd residual = pred - noise.col(i);
        loss += residual.squaredNorm();
        if (weight != 0.0)
            net.backward(ws, (2.0 * weight / double(n)) * residual, grads);
    }
    return loss / double(n);
}

} // namespace okcanon
