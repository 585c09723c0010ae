#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace okcanon {

using NounPhraseId = std::uint32_t;
using RelationId = std::uint32_t;
using TripleId = std::uint32_t;

struct Triple {
    NounPhraseId head;
    RelationId relation;
    NounPhraseId tail;

    bool operator==(const Triple&) const = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const noexcept {
        std::size_t h = t.head;
        h = h * 0x9e3779b97f4a7c15ULL + t.relation;
        h = h * 0x9e3779b97f4a7c15ULL + t.tail;
        return h;
    }
};

// Interns surface strings to dense ids in first-seen order. Distinct strings
// map to distinct ids, identical strings to the same id.
class StringTable {
public:
    std::uint32_t intern(const std::string& s);
    std::optional<std::uint32_t> find(const std::string& s) const;
    const std::string& surface(std::uint32_t id) const { return strings_[id]; }
    std::size_t size() const { return strings_.size(); }

private:
    std::vector<std::string> strings_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

struct Corpus {
    StringTable phrases;
    StringTable relations;
    std::vector<Triple> triples;
    // Source sentences keyed by internal triple index; optional.
    std::unordered_map<TripleId, std::string> sentences;
    // External triple id (4th TSV column) -> internal index, for sentence joins.
    std::unordered_map<std::string, TripleId> external_triple_ids;
    std::size_t duplicate_triples_dropped = 0;

    bool contains_triple(const Triple& t) const { return triple_set_.count(t) > 0; }
    void index_triples();

private:
    std::unordered_set<Triple, TripleHash> triple_set_;
};

struct GoldLabels {
    std::unordered_map<NounPhraseId, std::string> entity_of;
    std::size_t skipped_unknown = 0;
    std::size_t duplicate_rows = 0;
};

// Phrase adjacency induced by head/tail co-occurrence within a triple.
// Symmetric, self-free; relation phrases are not nodes. Neighbor lists are
// sorted and deduplicated.
struct NeighborIndex {
    std::vector<std::vector<NounPhraseId>> neighbors;
};

// NFC-normalizes and trims a surface string. Case is preserved.
std::string normalize_surface(std::string_view raw);

// Loads a UTF-8 TSV of (head, relation, tail[, triple_id]) lines. Duplicate
// triples are dropped and counted; line order determines id order.
Corpus load_triples(const std::filesystem::path& path);

// Loads (phrase, entity_id) rows. Unknown phrases are skipped and counted,
// or rejected when `strict`.
GoldLabels load_gold(const std::filesystem::path& path, const Corpus& corpus,
                     bool strict = false);

// Loads (triple_id, sentence) rows into corpus.sentences, joining on the
// external ids recorded at triple ingestion. Returns the number of rows
// whose id did not resolve.
std::size_t load_sentences(const std::filesystem::path& path, Corpus& corpus);

NeighborIndex neighbor_index(const Corpus& corpus);

} // namespace okcanon
