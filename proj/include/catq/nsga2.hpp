#pragma once

#include "catq/config.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace catq {

struct Individual {
    std::vector<int> ints;
    std::vector<double> reals;
    std::vector<double> objectives;  // minimized
    double violation = 0.0;          // total constraint violation, 0 if feasible
    std::vector<double> extras;      // problem-specific outputs
    int rank = 0;
    double crowding = 0.0;

    bool feasible() const { return violation <= 0.0; }
};

struct Problem {
    std::vector<std::pair<int, int>> int_bounds;
    std::vector<std::pair<double, double>> real_bounds;
    std::function<void(Individual&)> repair;    // optional, applied after variation
    std::function<void(Individual&)> evaluate;  // must be thread safe
};

// Deb's rules: feasible beats infeasible, lower violation beats higher,
// otherwise Pareto dominance on the objectives.
bool constrained_dominates(const Individual& a, const Individual& b);
std::vector<std::vector<int>> non_dominated_sort(const std::vector<Individual>& pop);
std::vector<double> crowding_distance(const std::vector<Individual>& pop, const std::vector<int>& front);

struct Nsga2Result {
    std::vector<Individual> population;
    std::vector<Individual> front;  // first front of the final population, duplicates removed
    bool feasible = false;          // front contains feasible points only
    int evaluations = 0;
    std::vector<std::string> log;   // one line per generation
};

Nsga2Result run_nsga2(const Problem& p, const Nsga2Settings& s, int threads = 1);

// Area dominated by `pts` (minimization) and bounded by `ref`.
double hypervolume_2d(std::vector<std::pair<double, double>> pts, std::pair<double, double> ref);

}  // namespace catq
