#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>

#include <Eigen/Core>

#include "okcanon/corpus.hpp"

namespace okcanon {

// Pretrained word vectors in text format: token followed by `dim` floats per
// line, whitespace-separated.
struct VectorStore {
    std::unordered_map<std::string, Eigen::VectorXd> vectors;
    int dim = 0;
    std::size_t skipped_lines = 0;
    double mean_norm = 0.0; // over stored vectors, used for the OOV fallback scale
};

// Per-phrase base vectors and their neighbor-augmented counterparts, stored
// column-per-phrase. When `augmented` the top `dim` rows of each augmented
// column equal the base column exactly and the bottom rows hold the mean of
// the phrase's neighbors (zero when it has none).
struct AugmentedTable {
    Eigen::MatrixXd base;      // dim x n
    Eigen::MatrixXd augmented; // (2*dim or dim) x n
    bool is_augmented = false;

    Eigen::Index dim() const { return base.rows(); }
    Eigen::Index augmented_dim() const { return augmented.rows(); }
};

// Loads a word-vector file. `expected_dim` = 0 infers the dimension from the
// first valid line. Lines with the wrong component count are skipped and
// counted, or rejected when `strict`. Throws when no valid line remains.
VectorStore load_vectors(const std::filesystem::path& path, int expected_dim,
                         bool strict = false);

// Mean of the in-vocabulary token vectors of a whitespace-tokenized phrase.
// When no token is in vocabulary, falls back to a deterministic pseudo-random
// direction per token (seeded by a hash of the token) scaled to the store's
// mean vector norm.
Eigen::VectorXd phrase_embedding(std::string_view phrase, const VectorStore& store);

// Builds base vectors for every corpus phrase.
Eigen::MatrixXd embed_all_phrases(const Corpus& corpus, const VectorStore& store);

// Concatenates each base vector with the mean of its neighbors' base vectors.
// With `enabled` false the augmented table simply aliases the base vectors.
AugmentedTable augment(const Eigen::MatrixXd& base, const NeighborIndex& neighbors,
                       bool enabled);

} // namespace okcanon
