#include "okcanon/embedding.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <vector>

#include "okcanon/error.hpp"
#include "okcanon/rng.hpp"

namespace okcanon {

namespace {

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

bool parse_double(std::string_view s, double& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Eigen::VectorXd oov_fallback(std::string_view token, const VectorStore& store) {
    Rng rng(fnv1a(token));
    Eigen::VectorXd v = rng.gaussian_vector(store.dim);
    double n = v.norm();
    if (n == 0.0) v.setConstant(1.0 / std::sqrt(double(store.dim)));
    else v /= n;
    return v * store.mean_norm;
}

} // namespace

VectorStore load_vectors(const std::filesystem::path& path, int expected_dim,
                         bool strict) {
    std::ifstream in(path);
    if (!in) throw Error("embedding", "cannot open vector file: " + path.string());

    VectorStore store;
    store.dim = expected_dim;
    double norm_sum = 0.0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = split_ws(line);
        if (fields.empty()) continue;
        const int ncomp = static_cast<int>(fields.size()) - 1;
        if (store.dim == 0 && ncomp > 0) store.dim = ncomp;
        if (ncomp != store.dim) {
            if (strict)
                throw Error("embedding", "vector line " + std::to_string(line_no) +
                                             ": expected " + std::to_string(store.dim) +
                                             " components, got " + std::to_string(ncomp));
            ++store.skipped_lines;
            continue;
        }
        Eigen::VectorXd v(store.dim);
        bool ok = true;
        for (int i = 0; i < store.dim; ++i) {
            if (!parse_double(fields[i + 1], v(i))) {
                ok = false;
                break;
            }
        }
        if (!ok || !v.allFinite()) {
            if (strict)
                throw Error("embedding",
                            "vector line " + std::to_string(line_no) + ": bad float");
            ++store.skipped_lines;
            continue;
        }
        auto [it, inserted] = store.vectors.emplace(std::string(fields[0]), std::move(v));
        if (inserted) norm_sum += it->second.norm();
        else ++store.skipped_lines; // duplicate token, first entry wins
    }
    if (store.vectors.empty())
        throw Error("embedding", "no valid vectors in file: " + path.string());
    store.mean_norm = norm_sum / static_cast<double>(store.vectors.size());
    return store;
}

Eigen::VectorXd phrase_embedding(std::string_view phrase, const VectorStore& store) {
    auto tokens = split_ws(phrase);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(store.dim);
    int hits = 0;
    for (auto tok : tokens) {
        auto it = store.vectors.find(std::string(tok));
        if (it != store.vectors.end()) {
            sum += it->second;
            ++hits;
        }
    }
    if (hits > 0) return sum / double(hits);

    // Whole phrase out of vocabulary: average the per-token fallbacks.
    if (tokens.empty()) return Eigen::VectorXd::Zero(store.dim);
    for (auto tok : tokens) sum += oov_fallback(tok, store);
    return sum / double(tokens.size());
}

Eigen::MatrixXd embed_all_phrases(const Corpus& corpus, const VectorStore& store) {
    const auto n = static_cast<Eigen::Index>(corpus.phrases.size());
    Eigen::MatrixXd base(store.dim, n);
    for (Eigen::Index i = 0; i < n; ++i)
        base.col(i) =
            phrase_embedding(corpus.phrases.surface(static_cast<std::uint32_t>(i)), store);
    return base;
}

AugmentedTable augment(const Eigen::MatrixXd& base, const NeighborIndex& neighbors,
                       bool enabled) {
    AugmentedTable table;
    table.base = base;
    table.is_augmented = enabled;
    if (!enabled) {
        table.augmented = base;
        return table;
    }
    if (static_cast<std::size_t>(base.cols()) != neighbors.neighbors.size())
        throw Error("embedding", "augment: neighbor index size mismatch");

    const Eigen::Index d = base.rows();
    table.augmented.resize(2 * d, base.cols());
    for (Eigen::Index i = 0; i < base.cols(); ++i) {
        table.augmented.col(i).head(d) = base.col(i);
        const auto& nbrs = neighbors.neighbors[static_cast<std::size_t>(i)];
        if (nbrs.empty()) {
            table.augmented.col(i).tail(d).setZero();
        } else {
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
            for (auto j : nbrs) mean += base.col(j);
            table.augmented.col(i).tail(d) = mean / double(nbrs.size());
        }
    }
    if (!table.augmented.allFinite())
        throw Error("embedding", "augment: non-finite augmented vector");
    return table;
}

} // namespace okcanon
