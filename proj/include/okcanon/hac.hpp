#pragma once

#include <Eigen/Core>

#include "okcanon/assignment.hpp"

namespace okcanon {

enum class Linkage { single, complete, average };

// Pairwise cosine distances (1 - cosine similarity) between the columns of
// `vectors`. Throws on a zero-norm column.
Eigen::MatrixXd cosine_distance_matrix(const Eigen::MatrixXd& vectors);

// Agglomerative clustering over the columns of `vectors` under cosine
// distance. Clusters merge while the minimum inter-cluster linkage distance
// is <= threshold; ties break on the lexicographically smallest pair of
// cluster ids, where a cluster's id is its smallest member index. Resulting
// cluster indices are dense and ordered by smallest member.
ClusterAssignment hac_cluster(const Eigen::MatrixXd& vectors, Linkage linkage,
                              double threshold);

// Same algorithm on a precomputed symmetric distance matrix.
ClusterAssignment hac_cluster_from_distances(const Eigen::MatrixXd& dist, Linkage linkage,
                                             double threshold);

} // namespace okcanon
