#pragma once

#include <string>

#include "okcanon/assignment.hpp"
#include "okcanon/corpus.hpp"

namespace okcanon {

// Clustering quality against gold entity labels. All values lie in [0, 1];
// each F1 is 2PR/(P+R) with 0 when P+R = 0, and average_f1 is the mean of
// the three F1s.
struct Metrics {
    double macro_p = 0, macro_r = 0, macro_f1 = 0;
    double micro_p = 0, micro_r = 0, micro_f1 = 0;
    double pair_p = 0, pair_r = 0, pair_f1 = 0;
    double average_f1 = 0;
};

// Scores `pred` against gold labels. Unlabeled phrases are excluded first;
// predicted clusters left empty by the restriction do not count. Throws when
// no phrase is labeled.
//
// macro: fraction of predicted clusters whose members share one gold entity
//        (recall swaps the roles of predicted and gold clusters).
// micro: dominant-entity purity, sum over clusters of the majority count
//        divided by total membership (recall symmetric over gold).
// pair:  same-entity pairs inside predicted clusters over all intra-cluster
//        pairs (recall divides by all intra-entity pairs).
Metrics evaluate(const ClusterAssignment& pred, const GoldLabels& gold);

// Flat JSON object with the ten metric fields.
std::string metrics_to_json(const Metrics& m);

} // namespace okcanon
