#include "okcanon/hac.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "okcanon/error.hpp"

namespace okcanon {

Eigen::MatrixXd cosine_distance_matrix(const Eigen::MatrixXd& vectors) {
    const Eigen::Index n = vectors.cols();
    Eigen::VectorXd norms(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        norms(i) = vectors.col(i).norm();
        if (norms(i) == 0.0)
            throw Error("hac", "zero-norm vector at column " + std::to_string(i) +
                                   "; cosine distance undefined");
    }
    Eigen::MatrixXd dist(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        dist(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double cos = vectors.col(i).dot(vectors.col(j)) / (norms(i) * norms(j));
            const double d = 1.0 - cos;
            dist(i, j) = d;
            dist(j, i) = d;
        }
    }
    return dist;
}

ClusterAssignment hac_cluster_from_distances(const Eigen::MatrixXd& dist, Linkage linkage,
                                             double threshold) {
    const Eigen::Index n = dist.rows();
    if (n == 0) throw Error("hac", "no vectors to cluster");
    if (threshold < 0.0) throw Error("hac", "threshold must be non-negative");

    // Active clusters are identified by their smallest member index. link(a,b)
    // holds the current cluster-level linkage; for average linkage `sums`
    // carries the cross-pair distance totals it is derived from.
    std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(n));
    std::vector<Eigen::Index> reps;
    reps.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        members[static_cast<std::size_t>(i)] = {i};
        reps.push_back(i);
    }
    Eigen::MatrixXd link = dist;
    Eigen::MatrixXd sums;
    if (linkage == Linkage::average) sums = dist;

    while (reps.size() > 1) {
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index bi = -1, bj = -1;
        for (std::size_t x = 0; x < reps.size(); ++x) {
            for (std::size_t y = x + 1; y < reps.size(); ++y) {
                const double d = link(reps[x], reps[y]);
                if (d < best) { // first hit in scan order = smallest (min,max) pair
                    best = d;
                    bi = reps[x];
                    bj = reps[y];
                }
            }
        }
        if (best > threshold) break;

        const std::size_t na = members[static_cast<std::size_t>(bi)].size();
        const std::size_t nb = members[static_cast<std::size_t>(bj)].size();
        for (Eigen::Index k : reps) {
            if (k == bi || k == bj) continue;
            switch (linkage) {
            case Linkage::single:
                link(bi, k) = std::min(link(bi, k), link(bj, k));
                break;
            case Linkage::complete:
                link(bi, k) = std::max(link(bi, k), link(bj, k));
                break;
            case Linkage::average: {
                sums(bi, k) += sums(bj, k);
                sums(k, bi) = sums(bi, k);
                const std::size_t nk = members[static_cast<std::size_t>(k)].size();
                link(bi, k) = sums(bi, k) / (double(na + nb) * double(nk));
                break;
            }
            }
            link(k, bi) = link(bi, k);
        }

        // Merge bj into bi; bi < bj so bi remains the smallest member id.
        auto& ma = members[static_cast<std::size_t>(bi)];
        auto& mb = members[static_cast<std::size_t>(bj)];
        ma.insert(ma.end(), mb.begin(), mb.end());
        mb.clear();
        reps.erase(std::find(reps.begin(), reps.end(), bj));
    }

    ClusterAssignment out;
    out.labels.assign(static_cast<std::size_t>(n), 0);
    out.k = static_cast<std::uint32_t>(reps.size());
    // reps is ascending by construction, so cluster indices are ordered by
    // smallest member.
    for (std::size_t c = 0; c < reps.size(); ++c)
        for (Eigen::Index p : members[static_cast<std::size_t>(reps[c])])
            out.labels[static_cast<std::size_t>(p)] = static_cast<std::uint32_t>(c);
    return out;
}

ClusterAssignment hac_cluster(const Eigen::MatrixXd& vectors, Linkage linkage,
                              double threshold) {
    return hac_cluster_from_distances(cosine_distance_matrix(vectors), linkage, threshold);
}

} // namespace okcanon
