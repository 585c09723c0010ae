#pragma once

#include <memory>
#include <string>
#include <vector>

#include "okcanon/trainer.hpp"

namespace okcanon {

// Self-contained toy training problem for gradient verification: three
// separated point clouds over 20 phrases in 8 dimensions, 10 random triples,
// weak labels from agglomerative initialization, and a handful of candidate
// pairs. Fully determined by the seed.
struct GradcheckProblem {
    std::unique_ptr<Corpus> corpus;
    Problem problem;
};

GradcheckProblem make_gradcheck_problem(std::uint64_t seed);

// Central finite differences of the stage objective against the analytic
// gradients for every trainable parameter, on a frozen noise context.
// Returns the maximum relative error, with |a - f| measured against
// max(|a|, |f|, 1e-6).
double max_fd_relative_error(const TrainState& state, const Problem& problem, int stage,
                             double eps = 1e-5);

struct GradCheckRow {
    std::string name;
    double max_rel_error = 0.0;
};

// Runs the standard battery: each loss term in isolation (both triple-scoring
// backends) plus the combined stage objectives.
std::vector<GradCheckRow> run_gradient_checks(std::uint64_t seed, double eps = 1e-5);

} // namespace okcanon
