#include "okcanon/side_info.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "okcanon/error.hpp"

namespace okcanon {

namespace {

std::vector<std::string> lower_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

double idf_weight(const TokenStats& stats, const std::string& token) {
    auto it = stats.doc_freq.find(token);
    const double f = it != stats.doc_freq.end() ? double(it->second) : 1.0;
    return 1.0 / std::log(1.0 + f);
}

std::pair<NounPhraseId, NounPhraseId> ordered(NounPhraseId a, NounPhraseId b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

// Reads a two-column TSV, resolving both columns as corpus phrases for
// paraphrase files or (phrase, opaque id) for link files.
std::vector<std::pair<std::string, std::string>> read_tsv_pairs(
    const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in)
        throw Error("side_info",
                    std::string("cannot open ") + what + " file: " + path.string());
    std::vector<std::pair<std::string, std::string>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto pos = line.find('\t');
        if (pos == std::string::npos)
            throw Error("side_info", std::string(what) + " line " +
                                         std::to_string(line_no) +
                                         ": expected 2 tab-separated fields");
        rows.emplace_back(std::string(trim(line.substr(0, pos))),
                          std::string(trim(line.substr(pos + 1))));
    }
    return rows;
}

} // namespace

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = static_cast<std::uint32_t>(i);
}

std::uint32_t UnionFind::find(std::uint32_t x) {
    while (parent_[x] != x) {
        parent_[x] = parent_[parent_[x]];
        x = parent_[x];
    }
    return x;
}

void UnionFind::unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
}

TokenStats build_token_stats(const Corpus& corpus) {
    TokenStats stats;
    stats.phrase_tokens.resize(corpus.phrases.size());
    for (std::size_t i = 0; i < corpus.phrases.size(); ++i) {
        auto toks = lower_tokens(corpus.phrases.surface(static_cast<std::uint32_t>(i)));
        std::sort(toks.begin(), toks.end());
        toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
        for (const auto& t : toks) ++stats.doc_freq[t];
        stats.phrase_tokens[i] = std::move(toks);
    }
    return stats;
}

double idf_overlap(NounPhraseId a, NounPhraseId b, const TokenStats& stats) {
    const auto& ta = stats.phrase_tokens[a];
    const auto& tb = stats.phrase_tokens[b];
    if (ta.empty() || tb.empty()) return 0.0;

    double inter = 0.0, uni = 0.0;
    std::size_t i = 0, j = 0;
    while (i < ta.size() && j < tb.size()) {
        int cmp = ta[i].compare(tb[j]);
        if (cmp == 0) {
            const double w = idf_weight(stats, ta[i]);
            inter += w;
            uni += w;
            ++i;
            ++j;
        } else if (cmp < 0) {
            uni += idf_weight(stats, ta[i]);
            ++i;
        } else {
            uni += idf_weight(stats, tb[j]);
            ++j;
        }
    }
    for (; i < ta.size(); ++i) uni += idf_weight(stats, ta[i]);
    for (; j < tb.size(); ++j) uni += idf_weight(stats, tb[j]);
    if (inter == 0.0) return 0.0;
    return inter / uni;
}

std::string morph_normalize(std::string_view phrase) {
    auto tokens = lower_tokens(phrase);

    std::size_t start = 0;
    while (start < tokens.size() &&
           (tokens[start] == "the" || tokens[start] == "a" || tokens[start] == "an"))
        ++start;

    std::string out;
    for (std::size_t i = start; i < tokens.size(); ++i) {
        std::string& t = tokens[i];
        if (t.size() > 3 && t.back() == 's' && t[t.size() - 2] != 's')
            t.pop_back();
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

CandidatePairs build_equivalence(const std::optional<std::filesystem::path>& paraphrase_edges,
                                 const std::optional<std::filesystem::path>& entity_links,
                                 const Corpus& corpus, const TokenStats& stats,
                                 double idf_threshold) {
    if (idf_threshold < 0.0 || idf_threshold > 1.0)
        throw Error("side_info", "idf_threshold must lie in [0, 1]");

    const std::size_t n = corpus.phrases.size();
    // Keyed map keeps the max score per (pair, source).
    std::map<std::tuple<NounPhraseId, NounPhraseId, PairSource>, double> best;
    std::size_t skipped = 0;

    auto add = [&](NounPhraseId a, NounPhraseId b, PairSource src, double score) {
        if (a == b) return;
        auto [lo, hi] = ordered(a, b);
        auto key = std::make_tuple(lo, hi, src);
        auto it = best.find(key);
        if (it == best.end()) best.emplace(key, score);
        else it->second = std::max(it->second, score);
    };

    if (paraphrase_edges) {
        UnionFind uf(n);
        for (const auto& [lhs, rhs] : read_tsv_pairs(*paraphrase_edges, "paraphrase")) {
            auto a = corpus.phrases.find(normalize_surface(lhs));
            auto b = corpus.phrases.find(normalize_surface(rhs));
            if (!a || !b) {
                ++skipped;
                continue;
            }
            uf.unite(*a, *b);
        }
        // Expand each component to all intra-component pairs.
        std::unordered_map<std::uint32_t, std::vector<NounPhraseId>> components;
        for (std::uint32_t i = 0; i < n; ++i)
            components[uf.find(i)].push_back(i);
        for (const auto& [root, members] : components)
            for (std::size_t i = 0; i < members.size(); ++i)
                for (std::size_t j = i + 1; j < members.size(); ++j)
                    add(members[i], members[j], PairSource::paraphrase, 1.0);
    }

    if (entity_links) {
        std::unordered_map<std::string, std::vector<NounPhraseId>> by_entity;
        for (const auto& [phrase, entity] : read_tsv_pairs(*entity_links, "entity-link")) {
            auto id = corpus.phrases.find(normalize_surface(phrase));
            if (!id || entity.empty()) {
                ++skipped;
                continue;
            }
            by_entity[entity].push_back(*id);
        }
        for (auto& [entity, members] : by_entity) {
            std::sort(members.begin(), members.end());
            members.erase(std::unique(members.begin(), members.end()), members.end());
            for (std::size_t i = 0; i < members.size(); ++i)
                for (std::size_t j = i + 1; j < members.size(); ++j)
                    add(members[i], members[j], PairSource::entity_link, 1.0);
        }
    }

    {
        std::unordered_map<std::string, std::vector<NounPhraseId>> by_form;
        for (std::uint32_t i = 0; i < n; ++i) {
            std::string form = morph_normalize(corpus.phrases.surface(i));
            if (!form.empty()) by_form[form].push_back(i);
        }
        for (const auto& [form, members] : by_form)
            for (std::size_t i = 0; i < members.size(); ++i)
                for (std::size_t j = i + 1; j < members.size(); ++j)
                    add(members[i], members[j], PairSource::morph, 1.0);
    }

    if (idf_threshold > 0.0) {
        // Pairs sharing no token score zero, so candidates come from an
        // inverted token index.
        std::unordered_map<std::string, std::vector<NounPhraseId>> by_token;
        for (std::uint32_t i = 0; i < n; ++i)
            for (const auto& t : stats.phrase_tokens[i]) by_token[t].push_back(i);
        std::set<std::pair<NounPhraseId, NounPhraseId>> candidates;
        for (const auto& [tok, members] : by_token)
            for (std::size_t i = 0; i < members.size(); ++i)
                for (std::size_t j = i + 1; j < members.size(); ++j)
                    candidates.insert(ordered(members[i], members[j]));
        for (const auto& [a, b] : candidates) {
            const double s = idf_overlap(a, b, stats);
            if (s >= idf_threshold) add(a, b, PairSource::idf, s);
        }
    } else {
        for (std::uint32_t i = 0; i < n; ++i)
            for (std::uint32_t j = i + 1; j < n; ++j) {
                const double s = idf_overlap(i, j, stats);
                if (s >= idf_threshold) add(i, j, PairSource::idf, s);
            }
    }

    CandidatePairs pairs;
    pairs.skipped_edges = skipped;
    pairs.entries.reserve(best.size());
    for (const auto& [key, score] : best)
        pairs.entries.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), score});
    return pairs;
}

double side_loss(const Eigen::MatrixXd& latents, const CandidatePairs& pairs) {
    if (pairs.entries.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& p : pairs.entries)
        sum += p.score * (latents.col(p.a) - latents.col(p.b)).squaredNorm();
    return sum / double(pairs.entries.size());
}

double side_loss_grad(const Eigen::MatrixXd& latents, const CandidatePairs& pairs,
                      double weight, Eigen::MatrixXd& grad) {
    if (pairs.entries.empty()) return 0.0;
    const double inv = 1.0 / double(pairs.entries.size());
    double sum = 0.0;
    for (const auto& p : pairs.entries) {
        Eigen::VectorXd diff = latents.col(p.a) - latents.col(p.b);
        sum += p.score * diff.squaredNorm();
        grad.col(p.a) += weight * 2.0 * inv * p.score * diff;
        grad.col(p.b) -= weight * 2.0 * inv * p.score * diff;
    }
    return sum * inv;
}

} // namespace okcanon
