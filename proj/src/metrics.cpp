#include "okcanon/metrics.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "okcanon/error.hpp"

namespace okcanon {

namespace {

double f1(double p, double r) { return (p + r) > 0 ? 2.0 * p * r / (p + r) : 0.0; }

double pairs_of(std::size_t n) {
    return static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
}

struct Contingency {
    // cell[c][e] = number of labeled phrases in predicted cluster c with gold entity e
    std::vector<std::unordered_map<std::uint32_t, std::size_t>> cell;
    std::vector<std::size_t> pred_sizes;
    std::vector<std::size_t> gold_sizes;
};

} // namespace

Metrics evaluate(const ClusterAssignment& pred, const GoldLabels& gold) {
    // Dense gold entity ids over the labeled phrases covered by `pred`.
    std::unordered_map<std::string, std::uint32_t> entity_ids;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> items; // (pred cluster, gold entity)
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        auto it = gold.entity_of.find(static_cast<NounPhraseId>(i));
        if (it == gold.entity_of.end()) continue;
        auto eit = entity_ids
                       .emplace(it->second, static_cast<std::uint32_t>(entity_ids.size()))
                       .first;
        items.emplace_back(pred.labels[i], eit->second);
    }
    if (items.empty()) throw Error("metrics", "no gold-labeled phrases to evaluate");

    // Restrict predicted clusters to labeled members and drop empty ones.
    std::unordered_map<std::uint32_t, std::uint32_t> pred_remap;
    for (auto& [c, e] : items) {
        auto pit = pred_remap.emplace(c, static_cast<std::uint32_t>(pred_remap.size())).first;
        c = pit->second;
    }

    Contingency ct;
    ct.cell.resize(pred_remap.size());
    ct.pred_sizes.assign(pred_remap.size(), 0);
    ct.gold_sizes.assign(entity_ids.size(), 0);
    for (const auto& [c, e] : items) {
        ++ct.cell[c][e];
        ++ct.pred_sizes[c];
        ++ct.gold_sizes[e];
    }

    const std::size_t num_pred = ct.pred_sizes.size();
    const std::size_t num_gold = ct.gold_sizes.size();

    // Macro: purity of whole clusters. Micro: dominant-entity counts.
    // Pair: same-entity pairs within clusters.
    std::size_t pure_pred = 0, micro_hits = 0, total_members = 0;
    double pair_hits = 0, pair_total_pred = 0;
    for (std::size_t c = 0; c < num_pred; ++c) {
        std::size_t max_cell = 0;
        for (const auto& [e, n] : ct.cell[c]) {
            max_cell = std::max(max_cell, n);
            pair_hits += pairs_of(n);
        }
        if (max_cell == ct.pred_sizes[c]) ++pure_pred;
        micro_hits += max_cell;
        total_members += ct.pred_sizes[c];
        pair_total_pred += pairs_of(ct.pred_sizes[c]);
    }

    // Recall side: transpose the contingency.
    std::vector<std::unordered_map<std::uint32_t, std::size_t>> by_gold(num_gold);
    for (std::size_t c = 0; c < num_pred; ++c)
        for (const auto& [e, n] : ct.cell[c]) by_gold[e][static_cast<std::uint32_t>(c)] = n;

    std::size_t pure_gold = 0, micro_hits_r = 0;
    double pair_total_gold = 0;
    for (std::size_t e = 0; e < num_gold; ++e) {
        std::size_t max_cell = 0;
        for (const auto& [c, n] : by_gold[e]) max_cell = std::max(max_cell, n);
        if (max_cell == ct.gold_sizes[e]) ++pure_gold;
        micro_hits_r += max_cell;
        pair_total_gold += pairs_of(ct.gold_sizes[e]);
    }

    Metrics m;
    m.macro_p = num_pred > 0 ? static_cast<double>(pure_pred) / num_pred : 0.0;
    m.macro_r = num_gold > 0 ? static_cast<double>(pure_gold) / num_gold : 0.0;
    m.micro_p = total_members > 0 ? static_cast<double>(micro_hits) / total_members : 0.0;
    m.micro_r = total_members > 0 ? static_cast<double>(micro_hits_r) / total_members : 0.0;
    m.pair_p = pair_total_pred > 0 ? pair_hits / pair_total_pred : 0.0;
    m.pair_r = pair_total_gold > 0 ? pair_hits / pair_total_gold : 0.0;
    m.macro_f1 = f1(m.macro_p, m.macro_r);
    m.micro_f1 = f1(m.micro_p, m.micro_r);
    m.pair_f1 = f1(m.pair_p, m.pair_r);
    m.average_f1 = (m.macro_f1 + m.micro_f1 + m.pair_f1) / 3.0;
    return m;
}

std::string metrics_to_json(const Metrics& m) {
    nlohmann::ordered_json j;
    j["macro_p"] = m.macro_p;
    j["macro_r"] = m.macro_r;
    j["macro_f1"] = m.macro_f1;
    j["micro_p"] = m.micro_p;
    j["micro_r"] = m.micro_r;
    j["micro_f1"] = m.micro_f1;
    j["pair_p"] = m.pair_p;
    j["pair_r"] = m.pair_r;
    j["pair_f1"] = m.pair_f1;
    j["average_f1"] = m.average_f1;
    return j.dump(2);
}

} // namespace okcanon
