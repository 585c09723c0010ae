#include "okcanon/kge.hpp"

#include <cmath>
#include <complex>
#include <unordered_map>

#include <fftw3.h>

#include "okcanon/error.hpp"

namespace okcanon {

namespace {

constexpr Eigen::Index kFftThreshold = 64; // direct path wins below this size

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Numerically stable log(1 + exp(x)).
double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

// Real-input FFT helper around FFTW with cached plans per size. Single
// threaded; plans are created with FFTW_ESTIMATE so results do not depend on
// runtime measurement.
class RealFft {
public:
    static RealFft& instance() {
        static RealFft fft;
        return fft;
    }

    void forward(const Eigen::VectorXd& in, std::vector<std::complex<double>>& out) {
        const int n = static_cast<int>(in.size());
        auto& p = plans(n);
        std::copy(in.data(), in.data() + n, p.real_buf);
        fftw_execute(p.fwd);
        out.assign(reinterpret_cast<std::complex<double>*>(p.cplx_buf),
                   reinterpret_cast<std::complex<double>*>(p.cplx_buf) + n / 2 + 1);
    }

    Eigen::VectorXd inverse(const std::vector<std::complex<double>>& in, int n) {
        auto& p = plans(n);
        std::copy(in.begin(), in.end(),
                  reinterpret_cast<std::complex<double>*>(p.cplx_buf));
        fftw_execute(p.bwd);
        Eigen::VectorXd out(n);
        for (int i = 0; i < n; ++i) out(i) = p.real_buf[i] / double(n);
        return out;
    }

private:
    struct Plans {
        double* real_buf = nullptr;
        fftw_complex* cplx_buf = nullptr;
        fftw_plan fwd = nullptr;
        fftw_plan bwd = nullptr;
    };

    Plans& plans(int n) {
        auto it = cache_.find(n);
        if (it != cache_.end()) return it->second;
        Plans p;
        p.real_buf = fftw_alloc_real(static_cast<std::size_t>(n));
        p.cplx_buf = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
        p.fwd = fftw_plan_dft_r2c_1d(n, p.real_buf, p.cplx_buf, FFTW_ESTIMATE);
        p.bwd = fftw_plan_dft_c2r_1d(n, p.cplx_buf, p.real_buf, FFTW_ESTIMATE);
        return cache_.emplace(n, p).first->second;
    }

    std::unordered_map<int, Plans> cache_;
};

void check_dims(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size() || a.size() == 0)
        throw Error("kge", "vector dimension mismatch");
}

} // namespace

Eigen::VectorXd circular_correlation_direct(const Eigen::VectorXd& a,
                                            const Eigen::VectorXd& b) {
    check_dims(a, b);
    const Eigen::Index d = a.size();
    Eigen::VectorXd out(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) s += a(i) * b((k + i) % d);
        out(k) = s;
    }
    return out;
}

Eigen::VectorXd circular_correlation_fft(const Eigen::VectorXd& a,
                                         const Eigen::VectorXd& b) {
    check_dims(a, b);
    const int n = static_cast<int>(a.size());
    auto& fft = RealFft::instance();
    std::vector<std::complex<double>> fa, fb;
    fft.forward(a, fa);
    fft.forward(b, fb);
    for (std::size_t i = 0; i < fa.size(); ++i) fa[i] = std::conj(fa[i]) * fb[i];
    return fft.inverse(fa, n);
}

Eigen::VectorXd circular_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() >= kFftThreshold ? circular_correlation_fft(a, b)
                                     : circular_correlation_direct(a, b);
}

Eigen::VectorXd circular_convolution(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    check_dims(a, b);
    const Eigen::Index d = a.size();
    if (d >= kFftThreshold) {
        auto& fft = RealFft::instance();
        std::vector<std::complex<double>> fa, fb;
        fft.forward(a, fa);
        fft.forward(b, fb);
        for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
        return fft.inverse(fa, static_cast<int>(d));
    }
    Eigen::VectorXd out(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) s += a(i) * b(((k - i) % d + d) % d);
        out(k) = s;
    }
    return out;
}

double hole_score(const Eigen::VectorXd& h, const Eigen::VectorXd& r,
                  const Eigen::VectorXd& t) {
    check_dims(h, t);
    check_dims(h, r);
    return sigmoid(r.dot(circular_correlation(h, t)));
}

double transe_score(const Eigen::VectorXd& h, const Eigen::VectorXd& r,
                    const Eigen::VectorXd& t) {
    check_dims(h, t);
    check_dims(h, r);
    return -(h + r - t).norm();
}

std::vector<Triple> sample_negatives(const Triple& triple, int n, const Corpus& corpus,
                                     Rng& rng) {
    const std::size_t num_phrases = corpus.phrases.size();
    if (num_phrases < 2) throw Error("kge", "negative sampling needs >= 2 phrases");
    if (n < 1) throw Error("kge", "negative sample count must be positive");

    constexpr int kMaxRetries = 64;
    std::vector<Triple> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Triple candidate = triple;
        Triple fallback = triple;
        bool have_fallback = false;
        for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
            candidate = triple;
            const bool corrupt_head = rng.uniform_below(2) == 0;
            const auto replacement =
                static_cast<NounPhraseId>(rng.uniform_below(num_phrases));
            if (corrupt_head) candidate.head = replacement;
            else candidate.tail = replacement;
            if (candidate == triple) continue;
            if (!have_fallback) {
                fallback = candidate;
                have_fallback = true;
            }
            if (!corpus.contains_triple(candidate)) break;
            candidate = triple; // keep searching
        }
        if (candidate == triple) {
            // Exhausted retries: accept any differing triple seen, else force
            // a differing tail.
            if (have_fallback) candidate = fallback;
            else {
                candidate.tail = candidate.tail == 0 ? 1 : candidate.tail - 1;
            }
        }
        out.push_back(candidate);
    }
    return out;
}

double kge_loss_terms(const std::vector<Triple>& positives,
                      const std::vector<std::vector<Triple>>& negatives,
                      const Eigen::MatrixXd& entities, const KgeParams& params,
                      double weight, KgeGrads* grads) {
    if (positives.size() != negatives.size())
        throw Error("kge", "positive/negative list size mismatch");
    if (positives.empty()) return 0.0;

    double loss = 0.0;
    std::size_t terms = 0;

    if (params.backend == KgeBackend::hole) {
        auto raw = [&](const Triple& t) {
            return params.relations.col(t.relation)
                .dot(circular_correlation(entities.col(t.head), entities.col(t.tail)));
        };
        // d(raw)/dh = corr(r, t), d(raw)/dt = conv(h, r), d(raw)/dr = corr(h, t).
        auto accumulate = [&](const Triple& t, double d_raw) {
            if (!grads || d_raw == 0.0) return;
            const auto h = entities.col(t.head);
            const auto tl = entities.col(t.tail);
            const auto r = params.relations.col(t.relation);
            grads->d_entities.col(t.head) += d_raw * circular_correlation(r, tl);
            grads->d_entities.col(t.tail) += d_raw * circular_convolution(h, r);
            grads->d_relations.col(t.relation) += d_raw * circular_correlation(h, tl);
        };

        std::vector<std::pair<const Triple*, double>> staged; // (triple, d_loss/d_raw)
        for (std::size_t p = 0; p < positives.size(); ++p) {
            const double rp = raw(positives[p]);
            loss += softplus(-rp);
            ++terms;
            staged.emplace_back(&positives[p], -sigmoid(-rp));
            for (const Triple& neg : negatives[p]) {
                const double rn = raw(neg);
                loss += softplus(rn);
                ++terms;
                staged.emplace_back(&neg, sigmoid(rn));
            }
        }
        loss /= double(terms);
        if (grads) {
            const double scale = weight / double(terms);
            for (const auto& [t, d_raw] : staged) accumulate(*t, scale * d_raw);
        }
        return loss;
    }

    // Translational backend: margin ranking over (positive, negative) pairs.
    auto dist_grad = [&](const Triple& t, double coeff) {
        const Eigen::VectorXd delta =
            entities.col(t.head) + params.relations.col(t.relation) - entities.col(t.tail);
        const double d = delta.norm();
        if (grads && coeff != 0.0 && d > 0.0) {
            const Eigen::VectorXd g = (coeff / d) * delta;
            grads->d_entities.col(t.head) += g;
            grads->d_relations.col(t.relation) += g;
            grads->d_entities.col(t.tail) -= g;
        }
        return d;
    };
    auto dist = [&](const Triple& t) {
        return (entities.col(t.head) + params.relations.col(t.relation) -
                entities.col(t.tail))
            .norm();
    };

    for (std::size_t p = 0; p < positives.size(); ++p) terms += negatives[p].size();
    if (terms == 0) return 0.0;
    const double scale = weight / double(terms);

    for (std::size_t p = 0; p < positives.size(); ++p) {
        const double d_pos = dist(positives[p]);
        for (const Triple& neg : negatives[p]) {
            const double d_neg = dist(neg);
            const double margin_term = params.margin + d_pos - d_neg;
            if (margin_term > 0.0) {
                loss += margin_term;
                dist_grad(positives[p], scale);
                dist_grad(neg, -scale);
            }
        }
    }
    return loss / double(terms);
}

double kge_loss(const Corpus& corpus, const Eigen::MatrixXd& entities,
                const KgeParams& params, int n_neg, Rng& rng) {
    std::vector<std::vector<Triple>> negatives;
    negatives.reserve(corpus.triples.size());
    for (const Triple& t : corpus.triples)
        negatives.push_back(sample_negatives(t, n_neg, corpus, rng));
    return kge_loss_terms(corpus.triples, negatives, entities, params, 0.0, nullptr);
}

} // namespace okcanon
