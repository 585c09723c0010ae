#include <doctest.h>

#include <cmath>
#include <set>

#include "okcanon/error.hpp"
#include "okcanon/kge.hpp"
#include "support/synthetic.hpp"

using namespace okcanon;

namespace {

Corpus tiny_corpus(int phrases, int relations, const std::vector<Triple>& triples) {
    Corpus c;
    for (int i = 0; i < phrases; ++i) c.phrases.intern("e" + std::to_string(i));
    for (int r = 0; r < relations; ++r) c.relations.intern("r" + std::to_string(r));
    c.triples = triples;
    c.index_triples();
    return c;
}

double direct_raw(const Eigen::VectorXd& h, const Eigen::VectorXd& r,
                  const Eigen::VectorXd& t) {
    return r.dot(circular_correlation_direct(h, t));
}

double softplus(double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

} // namespace

TEST_CASE("correlation with the unit impulse is the identity") {
    Rng rng(1);
    for (int d : {2, 5, 16}) {
        Eigen::VectorXd impulse = Eigen::VectorXd::Zero(d);
        impulse(0) = 1.0;
        Eigen::VectorXd b = rng.gaussian_vector(d);
        CHECK(circular_correlation_direct(impulse, b) == b);
        CHECK((circular_correlation_fft(impulse, b) - b).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("correlation matches the hand-expanded 2-d case") {
    Eigen::VectorXd a(2), b(2);
    a << 1, 2;
    b << 3, 4;
    Eigen::VectorXd out = circular_correlation_direct(a, b);
    CHECK(out(0) == 11.0);
    CHECK(out(1) == 10.0);
}

TEST_CASE("fft and direct correlation agree") {
    Rng rng(2);
    for (int d : {4, 16, 128}) {
        for (int trial = 0; trial < 100; ++trial) {
            Eigen::VectorXd a = rng.gaussian_vector(d);
            Eigen::VectorXd b = rng.gaussian_vector(d);
            Eigen::VectorXd direct = circular_correlation_direct(a, b);
            Eigen::VectorXd fft = circular_correlation_fft(a, b);
            CHECK((direct - fft).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("convolution agrees between paths and relates to correlation gradients") {
    Rng rng(3);
    for (int d : {4, 65, 128}) { // 65 exercises the FFT path at an odd size
        Eigen::VectorXd a = rng.gaussian_vector(d);
        Eigen::VectorXd b = rng.gaussian_vector(d);
        Eigen::VectorXd direct(d);
        for (int k = 0; k < d; ++k) {
            double s = 0;
            for (int i = 0; i < d; ++i) s += a(i) * b(((k - i) % d + d) % d);
            direct(k) = s;
        }
        CHECK((circular_convolution(a, b) - direct).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("dimension mismatches are rejected") {
    Eigen::VectorXd a(3), b(4);
    a.setOnes();
    b.setOnes();
    CHECK_THROWS_AS(static_cast<void>(circular_correlation(a, b)), Error);
}

TEST_CASE("correlation score saturates to one half at zero relation") {
    Rng rng(4);
    const int d = 8;
    Eigen::VectorXd h = rng.gaussian_vector(d);
    Eigen::VectorXd t = rng.gaussian_vector(d);
    CHECK(hole_score(h, Eigen::VectorXd::Zero(d), t) == doctest::Approx(0.5));

    Eigen::VectorXd impulse = Eigen::VectorXd::Zero(d);
    impulse(0) = 1.0;
    Eigen::VectorXd r = rng.gaussian_vector(d);
    CHECK(hole_score(impulse, r, t) ==
          doctest::Approx(1.0 / (1.0 + std::exp(-r.dot(t)))));
}

TEST_CASE("translation score is the negative distance") {
    Eigen::VectorXd h(2), r(2), t(2);
    h << 1, 1;
    r << 2, 3;
    t = h + r;
    CHECK(transe_score(h, r, t) == doctest::Approx(0.0));

    h.setZero();
    r.setZero();
    t << 3, 4;
    CHECK(transe_score(h, r, t) == doctest::Approx(-5.0));

    Rng rng(5);
    Eigen::VectorXd hh = rng.gaussian_vector(6), rr = rng.gaussian_vector(6),
                    tt = rng.gaussian_vector(6);
    CHECK(transe_score(hh, rr, tt) == doctest::Approx(-(hh + rr - tt).norm()));
}

TEST_CASE("sample_negatives returns distinct corruptions") {
    Corpus c = tiny_corpus(6, 2, {{0, 0, 1}, {1, 1, 2}, {2, 0, 3}});
    Rng rng(6);
    const Triple positive{0, 0, 1};
    auto negs = sample_negatives(positive, 20, c, rng);
    CHECK(negs.size() == 20);
    for (const Triple& n : negs) {
        CHECK(n != positive);
        CHECK(n.relation == positive.relation); // only head or tail corrupted
        CHECK((n.head == positive.head || n.tail == positive.tail));
    }
}

TEST_CASE("sample_negatives with two phrases is forced") {
    Corpus c = tiny_corpus(2, 1, {{0, 0, 1}});
    Rng rng(7);
    auto negs = sample_negatives({0, 0, 1}, 1, c, rng);
    REQUIRE(negs.size() == 1);
    CHECK(negs[0] != Triple{0, 0, 1});
}

TEST_CASE("sample_negatives is deterministic under a fixed seed") {
    Corpus c = tiny_corpus(9, 3, {{0, 0, 1}, {2, 1, 3}});
    Rng r1(8), r2(8);
    auto a = sample_negatives({0, 0, 1}, 10, c, r1);
    auto b = sample_negatives({0, 0, 1}, 10, c, r2);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("translation loss is zero when every margin is satisfied") {
    // h + r = t exactly for the positive, negatives far away.
    Eigen::MatrixXd entities(2, 4);
    entities.col(0) << 0, 0;
    entities.col(1) << 1, 0;
    entities.col(2) << 50, 50;
    entities.col(3) << -60, 40;
    KgeParams params;
    params.backend = KgeBackend::transe;
    params.margin = 1.0;
    params.relations = Eigen::MatrixXd(2, 1);
    params.relations.col(0) << 1, 0;

    std::vector<Triple> pos = {{0, 0, 1}};
    std::vector<std::vector<Triple>> negs = {{{0, 0, 2}, {0, 0, 3}, {2, 0, 1}}};
    CHECK(kge_loss_terms(pos, negs, entities, params, 0.0, nullptr) == 0.0);
}

TEST_CASE("correlation loss equals ln 2 when all raw scores vanish") {
    Eigen::MatrixXd entities = Eigen::MatrixXd::Zero(4, 3);
    KgeParams params;
    params.backend = KgeBackend::hole;
    params.relations = Eigen::MatrixXd::Zero(4, 1);
    std::vector<Triple> pos = {{0, 0, 1}, {1, 0, 2}};
    std::vector<std::vector<Triple>> negs = {{{0, 0, 2}}, {{1, 0, 0}}};
    CHECK(kge_loss_terms(pos, negs, entities, params, 0.0, nullptr) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("correlation loss matches a hand-unrolled replay on a toy KB") {
    Rng rng(9);
    const int d = 5;
    Corpus c = tiny_corpus(5, 2, {{0, 0, 1}, {1, 1, 2}, {2, 0, 3}, {3, 1, 4}, {4, 0, 0}});
    Eigen::MatrixXd entities(d, 5);
    for (int i = 0; i < 5; ++i) entities.col(i) = rng.gaussian_vector(d);
    KgeParams params;
    params.backend = KgeBackend::hole;
    params.relations.resize(d, 2);
    params.relations.col(0) = rng.gaussian_vector(d);
    params.relations.col(1) = rng.gaussian_vector(d);

    Rng neg_rng(10);
    std::vector<std::vector<Triple>> negs;
    for (const Triple& t : c.triples) negs.push_back(sample_negatives(t, 3, c, neg_rng));

    double expected = 0.0;
    std::size_t terms = 0;
    for (std::size_t p = 0; p < c.triples.size(); ++p) {
        const Triple& t = c.triples[p];
        expected += softplus(-direct_raw(entities.col(t.head),
                                         params.relations.col(t.relation),
                                         entities.col(t.tail)));
        ++terms;
        for (const Triple& n : negs[p]) {
            expected += softplus(direct_raw(entities.col(n.head),
                                            params.relations.col(n.relation),
                                            entities.col(n.tail)));
            ++terms;
        }
    }
    expected /= double(terms);

    CHECK(kge_loss_terms(c.triples, negs, entities, params, 0.0, nullptr) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("translation loss is invariant under a global entity shift") {
    Rng rng(11);
    const int d = 4;
    Corpus c = tiny_corpus(4, 2, {{0, 0, 1}, {1, 1, 2}, {2, 0, 3}});
    Eigen::MatrixXd entities(d, 4);
    for (int i = 0; i < 4; ++i) entities.col(i) = rng.gaussian_vector(d);
    KgeParams params;
    params.backend = KgeBackend::transe;
    params.relations.resize(d, 2);
    params.relations.col(0) = rng.gaussian_vector(d);
    params.relations.col(1) = rng.gaussian_vector(d);

    Rng neg_rng(12);
    std::vector<std::vector<Triple>> negs;
    for (const Triple& t : c.triples) negs.push_back(sample_negatives(t, 4, c, neg_rng));

    const double base = kge_loss_terms(c.triples, negs, entities, params, 0.0, nullptr);
    Eigen::MatrixXd shifted = entities;
    Eigen::VectorXd offset = rng.gaussian_vector(d);
    for (int i = 0; i < 4; ++i) shifted.col(i) += offset;
    const double moved = kge_loss_terms(c.triples, negs, shifted, params, 0.0, nullptr);
    CHECK(moved == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("loss gradients match finite differences for both backends") {
    Rng rng(13);
    const int d = 4;
    Corpus c = tiny_corpus(5, 2, {{0, 0, 1}, {1, 1, 2}, {3, 0, 4}});
    Eigen::MatrixXd entities(d, 5);
    for (int i = 0; i < 5; ++i) entities.col(i) = rng.gaussian_vector(d);

    for (KgeBackend backend : {KgeBackend::hole, KgeBackend::transe}) {
        KgeParams params;
        params.backend = backend;
        params.margin = 1.0;
        params.relations.resize(d, 2);
        params.relations.col(0) = rng.gaussian_vector(d);
        params.relations.col(1) = rng.gaussian_vector(d);

        Rng neg_rng(14);
        std::vector<std::vector<Triple>> negs;
        for (const Triple& t : c.triples)
            negs.push_back(sample_negatives(t, 3, c, neg_rng));

        KgeGrads grads;
        grads.d_entities = Eigen::MatrixXd::Zero(d, 5);
        grads.d_relations = Eigen::MatrixXd::Zero(d, 2);
        kge_loss_terms(c.triples, negs, entities, params, 1.0, &grads);

        const double eps = 1e-6;
        for (int i = 0; i < 5; ++i)
            for (int k = 0; k < d; ++k) {
                Eigen::MatrixXd up = entities, down = entities;
                up(k, i) += eps;
                down(k, i) -= eps;
                const double fd = (kge_loss_terms(c.triples, negs, up, params, 0.0, nullptr) -
                                   kge_loss_terms(c.triples, negs, down, params, 0.0,
                                                  nullptr)) /
                                  (2 * eps);
                CHECK(grads.d_entities(k, i) == doctest::Approx(fd).epsilon(1e-4));
            }
        for (int r = 0; r < 2; ++r)
            for (int k = 0; k < d; ++k) {
                KgeParams up = params, down = params;
                up.relations(k, r) += eps;
                down.relations(k, r) -= eps;
                const double fd =
                    (kge_loss_terms(c.triples, negs, entities, up, 0.0, nullptr) -
                     kge_loss_terms(c.triples, negs, entities, down, 0.0, nullptr)) /
                    (2 * eps);
                CHECK(grads.d_relations(k, r) == doctest::Approx(fd).epsilon(1e-4));
            }
    }
}

TEST_CASE("kge_loss runs over a corpus with sampled negatives") {
    Rng rng(15);
    const int d = 6;
    Corpus c = tiny_corpus(6, 2, {{0, 0, 1}, {1, 1, 2}, {2, 0, 3}, {4, 1, 5}});
    Eigen::MatrixXd entities(d, 6);
    for (int i = 0; i < 6; ++i) entities.col(i) = rng.gaussian_vector(d);
    KgeParams params;
    params.backend = KgeBackend::hole;
    params.relations.resize(d, 2);
    params.relations.col(0) = rng.gaussian_vector(d);
    params.relations.col(1) = rng.gaussian_vector(d);

    Rng la(100), lb(100);
    const double a = kge_loss(c, entities, params, 20, la);
    const double b = kge_loss(c, entities, params, 20, lb);
    CHECK(a == b);
    CHECK(a >= 0.0);
}
