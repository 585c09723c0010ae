#include "okcanon/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "okcanon/error.hpp"

namespace okcanon {

namespace {

bool is_ascii(std::string_view s) {
    for (unsigned char c : s)
        if (c >= 0x80) return false;
    return true;
}

std::string nfc(std::string_view s) {
    if (is_ascii(s)) return std::string(s); // NFC is identity on ASCII

    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error("corpus", "ICU NFC instance unavailable");

    icu::UnicodeString u = icu::UnicodeString::fromUTF8(
        icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    icu::UnicodeString out = norm->normalize(u, status);
    if (U_FAILURE(status)) throw Error("corpus", "NFC normalization failed");
    std::string result;
    out.toUTF8String(result);
    return result;
}

std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

} // namespace

std::string normalize_surface(std::string_view raw) {
    return nfc(trim(raw));
}

std::uint32_t StringTable::intern(const std::string& s) {
    auto it = index_.find(s);
    if (it != index_.end()) return it->second;
    auto id = static_cast<std::uint32_t>(strings_.size());
    strings_.push_back(s);
    index_.emplace(s, id);
    return id;
}

std::optional<std::uint32_t> StringTable::find(const std::string& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void Corpus::index_triples() {
    triple_set_.clear();
    triple_set_.reserve(triples.size());
    for (const Triple& t : triples) triple_set_.insert(t);
}

Corpus load_triples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("corpus", "cannot open triple file: " + path.string());

    Corpus corpus;
    std::unordered_set<Triple, TripleHash> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() < 3)
            throw Error("corpus", "line " + std::to_string(line_no) +
                                      ": expected >=3 tab-separated fields, got " +
                                      std::to_string(fields.size()));
        std::string head = normalize_surface(fields[0]);
        std::string rel = normalize_surface(fields[1]);
        std::string tail = normalize_surface(fields[2]);
        if (head.empty() || rel.empty() || tail.empty())
            throw Error("corpus", "line " + std::to_string(line_no) + ": empty field");

        Triple t{corpus.phrases.intern(head), corpus.relations.intern(rel),
                 corpus.phrases.intern(tail)};
        if (!seen.insert(t).second) {
            ++corpus.duplicate_triples_dropped;
            if (fields.size() >= 4) {
                std::string ext = std::string(trim(fields[3]));
                if (!ext.empty()) {
                    // Point the duplicate's external id at the retained triple.
                    auto it = std::find(corpus.triples.begin(), corpus.triples.end(), t);
                    corpus.external_triple_ids.emplace(
                        ext, static_cast<TripleId>(it - corpus.triples.begin()));
                }
            }
            continue;
        }
        auto id = static_cast<TripleId>(corpus.triples.size());
        corpus.triples.push_back(t);
        if (fields.size() >= 4) {
            std::string ext = std::string(trim(fields[3]));
            if (!ext.empty()) corpus.external_triple_ids.emplace(ext, id);
        }
    }
    if (corpus.triples.empty())
        throw Error("corpus", "no triples in file: " + path.string());
    corpus.index_triples();
    return corpus;
}

GoldLabels load_gold(const std::filesystem::path& path, const Corpus& corpus,
                     bool strict) {
    std::ifstream in(path);
    if (!in) throw Error("corpus", "cannot open gold file: " + path.string());

    GoldLabels gold;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() < 2)
            throw Error("corpus", "gold line " + std::to_string(line_no) +
                                      ": expected 2 tab-separated fields");
        std::string phrase = normalize_surface(fields[0]);
        std::string entity = std::string(trim(fields[1]));
        if (phrase.empty() || entity.empty())
            throw Error("corpus", "gold line " + std::to_string(line_no) + ": empty field");

        auto id = corpus.phrases.find(phrase);
        if (!id) {
            if (strict)
                throw Error("corpus", "gold line " + std::to_string(line_no) +
                                          ": unknown phrase \"" + phrase + "\"");
            ++gold.skipped_unknown;
            continue;
        }
        // First label wins on duplicate rows.
        if (!gold.entity_of.emplace(*id, entity).second) ++gold.duplicate_rows;
    }
    return gold;
}

std::size_t load_sentences(const std::filesystem::path& path, Corpus& corpus) {
    std::ifstream in(path);
    if (!in) throw Error("corpus", "cannot open sentence file: " + path.string());

    std::size_t skipped = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() < 2)
            throw Error("corpus", "sentence line " + std::to_string(line_no) +
                                      ": expected 2 tab-separated fields");
        std::string ext = std::string(trim(fields[0]));
        auto it = corpus.external_triple_ids.find(ext);
        if (it == corpus.external_triple_ids.end()) {
            ++skipped;
            continue;
        }
        corpus.sentences[it->second] = std::string(fields[1]);
    }
    return skipped;
}

NeighborIndex neighbor_index(const Corpus& corpus) {
    if (corpus.triples.empty()) throw Error("corpus", "neighbor_index: empty corpus");

    NeighborIndex index;
    index.neighbors.resize(corpus.phrases.size());
    for (const Triple& t : corpus.triples) {
        if (t.head == t.tail) continue;
        index.neighbors[t.head].push_back(t.tail);
        index.neighbors[t.tail].push_back(t.head);
    }
    for (auto& list : index.neighbors) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return index;
}

} // namespace okcanon
