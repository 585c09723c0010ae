#include <doctest.h>

#include <cmath>

#include "okcanon/error.hpp"
#include "okcanon/mixture.hpp"
#include "okcanon/rng.hpp"
#include "support/oracles.hpp"

using namespace okcanon;

namespace {

ClusterAssignment labels_of(std::vector<std::uint32_t> labels, std::uint32_t k) {
    ClusterAssignment a;
    a.labels = std::move(labels);
    a.k = k;
    return a;
}

} // namespace

TEST_CASE("init_mixture on two singleton clusters") {
    Eigen::MatrixXd latents(2, 2);
    latents.col(0) << 1, 2;
    latents.col(1) << -1, 0;
    MixtureParams p = init_mixture(labels_of({0, 1}, 2), latents);
    Eigen::VectorXd priors = p.priors();
    CHECK(priors(0) == doctest::Approx(0.5));
    CHECK(priors(1) == doctest::Approx(0.5));
    CHECK(p.means.col(0) == latents.col(0));
    CHECK(p.means.col(1) == latents.col(1));
    Eigen::MatrixXd vars = p.variances();
    for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
            CHECK(vars(d, c) ==
                  doctest::Approx(MixtureParams::kVarianceFloor).epsilon(1e-12));
}

TEST_CASE("init_mixture floors the variance of identical members") {
    Eigen::MatrixXd latents(3, 4);
    for (int i = 0; i < 4; ++i) latents.col(i) << 1, 1, 1;
    MixtureParams p = init_mixture(labels_of({0, 0, 0, 0}, 1), latents);
    Eigen::MatrixXd vars = p.variances();
    for (int d = 0; d < 3; ++d)
        CHECK(vars(d, 0) == doctest::Approx(MixtureParams::kVarianceFloor).epsilon(1e-12));
}

TEST_CASE("init_mixture matches per-cluster statistics on random data") {
    Rng rng(11);
    const int n = 30, d = 4, k = 3;
    Eigen::MatrixXd latents(d, n);
    std::vector<std::uint32_t> labels(n);
    for (int i = 0; i < n; ++i) {
        latents.col(i) = rng.gaussian_vector(d);
        labels[i] = static_cast<std::uint32_t>(rng.uniform_below(k));
    }
    // Guarantee non-empty clusters.
    labels[0] = 0;
    labels[1] = 1;
    labels[2] = 2;
    MixtureParams p = init_mixture(labels_of(labels, k), latents);

    for (int c = 0; c < k; ++c) {
        std::vector<int> members;
        for (int i = 0; i < n; ++i)
            if (labels[i] == static_cast<std::uint32_t>(c)) members.push_back(i);
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
        for (int i : members) mean += latents.col(i);
        mean /= double(members.size());
        CHECK((p.means.col(c) - mean).norm() == doctest::Approx(0.0).epsilon(1e-12));

        Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
        for (int i : members) var += (latents.col(i) - mean).array().square().matrix();
        var /= double(members.size());
        Eigen::VectorXd got = p.variances().col(c);
        for (int dd = 0; dd < d; ++dd)
            CHECK(got(dd) ==
                  doctest::Approx(std::max(var(dd), MixtureParams::kVarianceFloor)));

        CHECK(p.priors()(c) == doctest::Approx(double(members.size()) / n));
    }
}

TEST_CASE("init_mixture rejects empty input") {
    Eigen::MatrixXd latents(2, 0);
    CHECK_THROWS_AS(static_cast<void>(init_mixture(labels_of({}, 0), latents)), Error);
}

TEST_CASE("posterior with one cluster is a point mass") {
    Eigen::MatrixXd latents(2, 3);
    latents << 0, 1, 2, 0, 1, 2;
    MixtureParams p = init_mixture(labels_of({0, 0, 0}, 1), latents);
    Eigen::VectorXd v = posterior(Eigen::Vector2d(5, 5), p);
    CHECK(v.size() == 1);
    CHECK(v(0) == doctest::Approx(1.0));
}

TEST_CASE("posterior is symmetric between equidistant clusters") {
    MixtureParams p;
    p.prior_logits = Eigen::Vector2d(0.3, 0.3); // equal priors after softmax
    p.means.resize(2, 2);
    p.means.col(0) << 1, 0;
    p.means.col(1) << -1, 0;
    p.log_vars = Eigen::MatrixXd::Zero(2, 2);
    Eigen::VectorXd v = posterior(Eigen::Vector2d(0, 3), p);
    CHECK(v(0) == doctest::Approx(0.5));
    CHECK(v(1) == doctest::Approx(0.5));
}

TEST_CASE("posterior matches the naive density oracle") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 1 + static_cast<int>(rng.uniform_below(4));
        const int d = 1 + static_cast<int>(rng.uniform_below(16));
        MixtureParams p;
        p.prior_logits = rng.gaussian_vector(k);
        p.means.resize(d, k);
        p.log_vars.resize(d, k);
        for (int c = 0; c < k; ++c) {
            p.means.col(c) = rng.gaussian_vector(d);
            p.log_vars.col(c) = 0.5 * rng.gaussian_vector(d); // variances around 1
        }
        Eigen::VectorXd omega = rng.gaussian_vector(d);
        Eigen::VectorXd fast = posterior(omega, p);
        Eigen::VectorXd naive = test::naive_posterior(omega, p);
        CHECK(fast.sum() == doctest::Approx(1.0).epsilon(1e-9));
        for (int c = 0; c < k; ++c) CHECK(std::abs(fast(c) - naive(c)) < 1e-9);
    }
}

TEST_CASE("posterior is invariant to prior rescaling before normalization") {
    Rng rng(29);
    MixtureParams p;
    const int k = 4, d = 3;
    p.prior_logits = rng.gaussian_vector(k);
    p.means.resize(d, k);
    p.log_vars.resize(d, k);
    for (int c = 0; c < k; ++c) {
        p.means.col(c) = rng.gaussian_vector(d);
        p.log_vars.col(c) = Eigen::VectorXd::Zero(d);
    }
    Eigen::VectorXd omega = rng.gaussian_vector(d);
    Eigen::VectorXd base = posterior(omega, p);

    // Multiplying every unnormalized prior by a constant shifts all logits
    // equally and must not change the posterior.
    MixtureParams scaled = p;
    scaled.prior_logits.array() += std::log(7.5);
    Eigen::VectorXd rescaled = posterior(omega, scaled);
    for (int c = 0; c < k; ++c) CHECK(rescaled(c) == doctest::Approx(base(c)).epsilon(1e-12));
}

TEST_CASE("clustering_loss is zero on point-mass posteriors and log K on uniform") {
    Eigen::MatrixXd point(3, 2);
    point << 1, 0, 0, 1, 0, 0;
    CHECK(clustering_loss(point, labels_of({0, 1}, 3)) == doctest::Approx(0.0));

    Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(4, 5, 0.25);
    CHECK(clustering_loss(uniform, labels_of({0, 1, 2, 3, 0}, 4)) ==
          doctest::Approx(std::log(4.0)));
}

TEST_CASE("clustering_loss matches a direct summation") {
    Rng rng(37);
    const int k = 3, n = 10;
    Eigen::MatrixXd posteriors(k, n);
    std::vector<std::uint32_t> labels(n);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd raw(k);
        for (int c = 0; c < k; ++c) raw(c) = rng.uniform01() + 1e-3;
        posteriors.col(i) = raw / raw.sum();
        labels[i] = static_cast<std::uint32_t>(rng.uniform_below(k));
    }
    double expected = 0.0;
    for (int i = 0; i < n; ++i) expected -= std::log(posteriors(labels[i], i));
    expected /= n;
    CHECK(clustering_loss(posteriors, labels_of(labels, k)) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("clustering gradients match central finite differences") {
    Rng rng(41);
    const int k = 3, d = 4, n = 6;
    MixtureParams p;
    p.prior_logits = rng.gaussian_vector(k);
    p.means.resize(d, k);
    p.log_vars.resize(d, k);
    for (int c = 0; c < k; ++c) {
        p.means.col(c) = rng.gaussian_vector(d);
        p.log_vars.col(c) = 0.3 * rng.gaussian_vector(d);
    }
    Eigen::MatrixXd omegas(d, n);
    std::vector<std::uint32_t> labels(n);
    for (int i = 0; i < n; ++i) {
        omegas.col(i) = rng.gaussian_vector(d);
        labels[i] = static_cast<std::uint32_t>(rng.uniform_below(k));
    }
    ClusterAssignment weak = labels_of(labels, k);

    Eigen::MatrixXd d_omega = Eigen::MatrixXd::Zero(d, n);
    MixtureGrads grads;
    grads.d_prior_logits = Eigen::VectorXd::Zero(k);
    grads.d_means = Eigen::MatrixXd::Zero(d, k);
    grads.d_log_vars = Eigen::MatrixXd::Zero(d, k);
    const double loss = clustering_loss_grad(omegas, p, weak, 1.0, d_omega, grads);
    CHECK(loss == doctest::Approx(clustering_loss(posterior_all(omegas, p), weak)));

    const double eps = 1e-6;
    auto loss_at = [&](const MixtureParams& params, const Eigen::MatrixXd& om) {
        return clustering_loss(posterior_all(om, params), weak);
    };
    auto check_fd = [&](double got, double up, double down) {
        const double fd = (up - down) / (2 * eps);
        CHECK(got == doctest::Approx(fd).epsilon(1e-4));
    };

    for (int c = 0; c < k; ++c) {
        MixtureParams up = p, down = p;
        up.prior_logits(c) += eps;
        down.prior_logits(c) -= eps;
        check_fd(grads.d_prior_logits(c), loss_at(up, omegas), loss_at(down, omegas));
        for (int dd = 0; dd < d; ++dd) {
            up = p;
            down = p;
            up.means(dd, c) += eps;
            down.means(dd, c) -= eps;
            check_fd(grads.d_means(dd, c), loss_at(up, omegas), loss_at(down, omegas));
            up = p;
            down = p;
            up.log_vars(dd, c) += eps;
            down.log_vars(dd, c) -= eps;
            check_fd(grads.d_log_vars(dd, c), loss_at(up, omegas), loss_at(down, omegas));
        }
    }
    for (int i = 0; i < n; ++i)
        for (int dd = 0; dd < d; ++dd) {
            Eigen::MatrixXd up = omegas, down = omegas;
            up(dd, i) += eps;
            down(dd, i) -= eps;
            check_fd(d_omega(dd, i), loss_at(p, up), loss_at(p, down));
        }
}
