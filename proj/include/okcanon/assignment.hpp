#pragma once

#include <cstdint>
#include <vector>

namespace okcanon {

// Hard clustering over noun phrases: labels[i] is the cluster index of
// phrase i, dense in [0, k).
struct ClusterAssignment {
    std::vector<std::uint32_t> labels;
    std::uint32_t k = 0;
};

} // namespace okcanon
