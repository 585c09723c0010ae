#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "okcanon/corpus.hpp"

namespace okcanon {

// Document frequency of tokens across noun phrases (each phrase counts as
// one document) plus the per-phrase token sets the scores are computed over.
struct TokenStats {
    std::unordered_map<std::string, std::uint32_t> doc_freq;
    std::vector<std::vector<std::string>> phrase_tokens; // deduplicated, lowercased
};

enum class PairSource : std::uint8_t { paraphrase, entity_link, morph, idf };

// Candidate equivalence evidence between two phrases. Unordered: a < b.
struct CandidatePair {
    NounPhraseId a = 0;
    NounPhraseId b = 0;
    PairSource source = PairSource::paraphrase;
    double score = 1.0;
};

struct CandidatePairs {
    std::vector<CandidatePair> entries; // sorted by (a, b, source), one entry per key
    std::size_t skipped_edges = 0;      // file rows naming phrases absent from the corpus
};

// Union-find over noun phrases. The final partition is independent of the
// order unions are applied in.
class UnionFind {
public:
    explicit UnionFind(std::size_t n);
    std::uint32_t find(std::uint32_t x);
    void unite(std::uint32_t a, std::uint32_t b);

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> rank_;
};

TokenStats build_token_stats(const Corpus& corpus);

// IDF-weighted token overlap in [0, 1]: shared rare tokens score high.
double idf_overlap(NounPhraseId a, NounPhraseId b, const TokenStats& stats);

// Lowercases, strips leading determiners (the/a/an), strips a terminal
// plural "s" from tokens longer than three characters (words ending in "ss"
// are left alone so the map is idempotent), and collapses whitespace.
std::string morph_normalize(std::string_view phrase);

// Collects candidate pairs from four sources: transitive closure of
// paraphrase edges, shared entity links, equal morphological forms, and IDF
// token overlap at or above `idf_threshold`. Paths may be empty to skip the
// corresponding file-backed source.
CandidatePairs build_equivalence(const std::optional<std::filesystem::path>& paraphrase_edges,
                                 const std::optional<std::filesystem::path>& entity_links,
                                 const Corpus& corpus, const TokenStats& stats,
                                 double idf_threshold);

// Mean score-weighted squared latent distance over candidate pairs; zero for
// an empty pair set. `latents` is column-per-phrase.
double side_loss(const Eigen::MatrixXd& latents, const CandidatePairs& pairs);

// Accumulates weight * d(side_loss)/d(latents) into `grad` and returns the
// loss value.
double side_loss_grad(const Eigen::MatrixXd& latents, const CandidatePairs& pairs,
                      double weight, Eigen::MatrixXd& grad);

} // namespace okcanon
