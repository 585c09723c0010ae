#include <doctest.h>

#include <cmath>

#include "okcanon/diffusion.hpp"
#include "okcanon/error.hpp"

using namespace okcanon;

TEST_CASE("make_schedule single step") {
    NoiseSchedule s = make_schedule(1, 0.02, 0.02);
    CHECK(s.beta(0) == 0.02);
    CHECK(s.alpha(0) == doctest::Approx(0.98));
    CHECK(s.alpha_bar(0) == doctest::Approx(0.98));
}

TEST_CASE("make_schedule two steps reproduces the hand product") {
    NoiseSchedule s = make_schedule(2, 1e-4, 0.02);
    CHECK(s.beta(0) == doctest::Approx(1e-4));
    CHECK(s.beta(1) == doctest::Approx(0.02));
    CHECK(s.alpha(0) + s.beta(0) == 1.0);
    CHECK(s.alpha(1) + s.beta(1) == 1.0);
    CHECK(s.alpha_bar(1) == doctest::Approx(0.9999 * 0.98).epsilon(1e-12));
    CHECK(s.alpha_bar(1) == doctest::Approx(0.979902).epsilon(1e-9));
    CHECK(s.alpha_bar(0) > s.alpha_bar(1)); // strictly decreasing
}

TEST_CASE("make_schedule validates bounds") {
    CHECK_THROWS_AS(static_cast<void>(make_schedule(0, 1e-4, 0.02)), Error);
    CHECK_THROWS_AS(static_cast<void>(make_schedule(2, 0.0, 0.02)), Error);
    CHECK_THROWS_AS(static_cast<void>(make_schedule(2, 0.3, 0.2)), Error);
    CHECK_THROWS_AS(static_cast<void>(make_schedule(2, 0.1, 1.0)), Error);
}

TEST_CASE("forward_step approaches identity as beta vanishes") {
    NoiseSchedule s = make_schedule(1, 1e-12, 1e-12);
    Eigen::VectorXd x(3);
    x << 1, -2, 3;
    Rng rng(4);
    Eigen::VectorXd y = forward_step(x, 1, s, rng);
    CHECK((y - x).norm() < 1e-5);
}

TEST_CASE("forward_step is deterministic under a fixed seed") {
    NoiseSchedule s = make_schedule(2, 1e-4, 0.02);
    Eigen::VectorXd x(4);
    x << 1, 2, 3, 4;
    Rng r1(9), r2(9);
    CHECK(forward_step(x, 2, s, r1) == forward_step(x, 2, s, r2));
}

TEST_CASE("chained steps match the closed-form marginal in distribution") {
    const NoiseSchedule s = make_schedule(2, 1e-4, 0.02);
    const int d = 4;
    Eigen::VectorXd x0(d);
    x0 << 1.0, -2.0, 0.5, 3.0;
    const int samples = 100000;
    Rng rng(2718);

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < samples; ++i) {
        Eigen::VectorXd x = x0;
        for (int t = 1; t <= s.steps(); ++t) x = forward_step(x, t, s, rng);
        mean += x;
        sq += x.cwiseProduct(x);
    }
    mean /= samples;
    sq /= samples;
    const Eigen::VectorXd var = sq - mean.cwiseProduct(mean);

    const double ab = s.alpha_bar(1);
    for (int k = 0; k < d; ++k) {
        CHECK(std::abs(mean(k) - std::sqrt(ab) * x0(k)) <
              0.01 * std::abs(std::sqrt(ab) * x0(k)));
        CHECK(std::abs(var(k) - (1.0 - ab)) < 0.01 * (1.0 - ab));
    }
}

TEST_CASE("latent sampling follows the head parameterization") {
    const int d = 3;
    LatentHeads heads;
    heads.mean_weights = Eigen::MatrixXd::Identity(d, d) * 2.0;
    heads.log_scale_weights = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd x(d);
    x << 1, 2, 3;

    // Zero log-scale head: unit scale, so omega = mean + z0.
    Eigen::VectorXd z0(d);
    z0 << 0.5, -0.5, 1.0;
    Eigen::VectorXd omega = latent_from(x, heads, z0);
    CHECK((omega - (2.0 * x + z0)).norm() == doctest::Approx(0.0));

    // Zero reparametrization noise: omega = mean exactly.
    Eigen::VectorXd scale;
    omega = latent_from(x, heads, Eigen::VectorXd::Zero(d), &scale);
    CHECK(omega == 2.0 * x);
    CHECK(scale == Eigen::VectorXd::Ones(d));
}

TEST_CASE("latent sample statistics match the head outputs") {
    Rng init(5);
    const int d = 4;
    LatentHeads heads;
    heads.mean_weights.resize(d, d);
    heads.log_scale_weights.resize(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            heads.mean_weights(r, c) = init.normal() * 0.5;
            heads.log_scale_weights(r, c) = init.normal() * 0.1;
        }
    Eigen::VectorXd x = init.gaussian_vector(d);
    const Eigen::VectorXd mu = heads.mean_weights.transpose() * x;
    const Eigen::VectorXd sigma =
        (heads.log_scale_weights.transpose() * x).array().exp();

    Rng rng(303);
    const int samples = 100000;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d), sq = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < samples; ++i) {
        Eigen::VectorXd w = sample_latent(x, heads, rng);
        mean += w;
        sq += w.cwiseProduct(w);
    }
    mean /= samples;
    sq /= samples;
    Eigen::VectorXd sd = (sq - mean.cwiseProduct(mean)).cwiseSqrt();
    for (int k = 0; k < d; ++k) {
        CHECK(std::abs(mean(k) - mu(k)) < 0.01 * std::max(1.0, std::abs(mu(k))));
        CHECK(std::abs(sd(k) - sigma(k)) < 0.01 * sigma(k));
    }
}

TEST_CASE("latent scale overflow raises a divergence error") {
    const int d = 2;
    LatentHeads heads;
    heads.mean_weights = Eigen::MatrixXd::Identity(d, d);
    heads.log_scale_weights = Eigen::MatrixXd::Identity(d, d) * 40.0;
    Eigen::VectorXd x(d);
    x << 1, 1;
    CHECK_THROWS_AS(static_cast<void>(latent_from(x, heads, Eigen::VectorXd::Zero(d))),
                    Error);
}

TEST_CASE("reverse step with a zero net rescales the input") {
    Rng rng(6);
    NoiseNet net(3, 2, 4, 1, rng);
    for (auto& w : net.weights) w.setZero();
    for (auto& b : net.biases) b.setZero();
    NoiseSchedule s = make_schedule(2, 1e-4, 0.02);
    Eigen::VectorXd x(3);
    x << 1, 2, 3;
    Eigen::VectorXd y = reverse_step_mean(x, 2, net, s);
    CHECK((y - x / std::sqrt(s.alpha(1))).norm() == doctest::Approx(0.0));
}

TEST_CASE("a perfect noise prediction inverts the first forward step") {
    // One linear layer with zero weights and bias = the injected noise gives
    // an exact predictor for a single sample.
    const int d = 3;
    NoiseSchedule s = make_schedule(2, 1e-4, 0.02);
    Eigen::VectorXd x0(d);
    x0 << 0.3, -1.2, 0.7;
    Eigen::VectorXd noise(d);
    noise << 0.4, 0.1, -0.9;

    const double a1 = s.alpha(0);
    Eigen::VectorXd x1 = std::sqrt(a1) * x0 + std::sqrt(1 - a1) * noise;

    Rng rng(7);
    NoiseNet net(d, 2, 1, 0, rng); // single linear layer
    net.weights[0].setZero();
    net.biases[0] = noise;
    Eigen::VectorXd recovered = reverse_step_mean(x1, 1, net, s);
    CHECK((recovered - x0).norm() < 1e-9);
}

TEST_CASE("reverse_step is deterministic under a fixed seed") {
    Rng init(8);
    NoiseNet net(3, 2, 4, 1, init);
    NoiseSchedule s = make_schedule(2, 1e-4, 0.02);
    Eigen::VectorXd x(3);
    x << 0.1, 0.2, 0.3;
    Rng r1(77), r2(77);
    CHECK(reverse_step(x, 2, net, s, r1) == reverse_step(x, 2, net, s, r2));
}

TEST_CASE("diffusion loss vanishes under perfect prediction") {
    const int d = 2;
    NoiseSchedule s = make_schedule(2, 1e-4, 0.02);
    Eigen::MatrixXd x0(d, 1);
    x0.col(0) << 1.0, -1.0;
    std::vector<int> ts = {2};
    Eigen::MatrixXd noise(d, 1);
    noise.col(0) << 0.25, -0.75;

    Rng rng(9);
    NoiseNet net(d, 2, 1, 0, rng);
    net.weights[0].setZero();
    net.biases[0] = noise.col(0);
    NoiseNet::Grads grads = net.zero_grads();
    CHECK(diffusion_loss_grad(x0, ts, noise, net, s, 0.0, grads) == doctest::Approx(0.0));
}

TEST_CASE("a zero net scores near the expected squared noise norm") {
    Rng init(10);
    const int d = 6;
    NoiseNet net(d, 2, 4, 1, init);
    for (auto& w : net.weights) w.setZero();
    for (auto& b : net.biases) b.setZero();
    NoiseSchedule s = make_schedule(2, 1e-4, 0.02);

    const int batch = 10000;
    Eigen::MatrixXd x0(d, batch);
    Rng data(11);
    for (int i = 0; i < batch; ++i) x0.col(i) = data.gaussian_vector(d);
    Rng rng(12);
    const double loss = diffusion_loss(x0, net, s, rng);
    CHECK(std::abs(loss - double(d)) < 0.05 * double(d));
}

TEST_CASE("single-sample loss matches a step-by-step replay") {
    const int d = 3;
    NoiseSchedule s = make_schedule(2, 1e-4, 0.02);
    Rng init(13);
    NoiseNet net(d, 2, 5, 2, init);
    Eigen::MatrixXd x0(d, 1);
    x0.col(0) << 0.5, 1.5, -0.5;
    std::vector<int> ts = {1};
    Eigen::MatrixXd noise(d, 1);
    noise.col(0) << -0.3, 0.8, 0.2;

    NoiseNet::Grads grads = net.zero_grads();
    const double loss = diffusion_loss_grad(x0, ts, noise, net, s, 0.0, grads);

    // Replay: x_t from the marginal, then the squared residual.
    Eigen::VectorXd x_t =
        std::sqrt(s.alpha_bar(0)) * x0.col(0) + std::sqrt(1 - s.alpha_bar(0)) * noise.col(0);
    const double expected = (noise.col(0) - net.predict(x_t, 1)).squaredNorm();
    CHECK(loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("diffusion loss gradients match finite differences") {
    const int d = 3, n = 4;
    NoiseSchedule s = make_schedule(2, 1e-4, 0.02);
    Rng init(14);
    NoiseNet net(d, 2, 4, 2, init);
    Eigen::MatrixXd x0(d, n);
    Rng data(15);
    for (int i = 0; i < n; ++i) x0.col(i) = data.gaussian_vector(d);
    std::vector<int> ts = {1, 2, 1, 2};
    Eigen::MatrixXd noise(d, n);
    for (int i = 0; i < n; ++i) noise.col(i) = data.gaussian_vector(d);

    NoiseNet::Grads grads = net.zero_grads();
    diffusion_loss_grad(x0, ts, noise, net, s, 1.0, grads);

    const double eps = 1e-6;
    NoiseNet::Grads unused = net.zero_grads();
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r)
            for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) {
                NoiseNet up = net, down = net;
                up.weights[l](r, c) += eps;
                down.weights[l](r, c) -= eps;
                const double fd = (diffusion_loss_grad(x0, ts, noise, up, s, 0.0, unused) -
                                   diffusion_loss_grad(x0, ts, noise, down, s, 0.0, unused)) /
                                  (2 * eps);
                CHECK(grads.d_weights[l](r, c) == doctest::Approx(fd).epsilon(1e-4));
            }
        for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
            NoiseNet up = net, down = net;
            up.biases[l](r) += eps;
            down.biases[l](r) -= eps;
            const double fd = (diffusion_loss_grad(x0, ts, noise, up, s, 0.0, unused) -
                               diffusion_loss_grad(x0, ts, noise, down, s, 0.0, unused)) /
                              (2 * eps);
            CHECK(grads.d_biases[l](r) == doctest::Approx(fd).epsilon(1e-4));
        }
    }
}
