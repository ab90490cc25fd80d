#pragma once

#include "catq/config.hpp"

#include <map>
#include <vector>

namespace catq {

struct StationaryDistribution {
    std::vector<RowVec> z;  // z[l] is the probability vector of level l
    int i0 = 0;             // initial level from the exponential surrogate
    int s = 0;              // final window length
    int converged_level = 0;
    int window_extensions = 0;
    double tail_mass = 0.0;  // mass of the last level kept

    int levels() const { return static_cast<int>(z.size()); }
    double total_mass() const;
};

// Smallest level whose mass drops below delta in the Poisson/exponential
// surrogate of `cfg`. Throws UnstableError if the surrogate is unstable.
int choose_initial_level(const ModelConfig& cfg);
ModelConfig exponential_surrogate(const ModelConfig& cfg);

// Two-seed G recursion on the window [i0-1, i0-1+s], doubling s until the
// seeds agree. G[l] maps level l+1 to level l, for l = 0..kappa.
struct GRecursion {
    int kappa = 0;
    int s = 0;
    std::map<int, Mat> G;
};
GRecursion g_recursion(const ModelConfig& cfg, int i0, int s);

StationaryDistribution solve_stationary(const ModelConfig& cfg);

// Sparse LU on the generator truncated at l_max (reference solution).
StationaryDistribution direct_truncated_solve(const ModelConfig& cfg, int l_max);

}  // namespace catq
