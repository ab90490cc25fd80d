#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "catq/backup_design.hpp"
#include "catq/errors.hpp"
#include "catq/nsga2.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace catq;
using namespace catq::test;

namespace {

Individual point(double a, double b, double violation = 0.0) {
    Individual x;
    x.objectives = {a, b};
    x.violation = violation;
    return x;
}

}  // namespace

TEST_CASE("three point sort") {
    std::vector<Individual> pop{point(1, 2), point(2, 1), point(2, 2)};
    auto f = non_dominated_sort(pop);
    REQUIRE(f.size() == 2);
    std::sort(f[0].begin(), f[0].end());
    CHECK(f[0] == std::vector<int>{0, 1});
    CHECK(f[1] == std::vector<int>{2});
    CHECK(non_dominated_sort({point(3, 3)}).size() == 1);
}

TEST_CASE("feasibility first") {
    CHECK(constrained_dominates(point(5, 5), point(0, 0, 0.1)));
    CHECK(constrained_dominates(point(5, 5, 0.1), point(0, 0, 0.2)));
    CHECK_FALSE(constrained_dominates(point(0, 0, 0.2), point(5, 5, 0.1)));
    CHECK_FALSE(constrained_dominates(point(1, 1), point(1, 1)));
}

TEST_CASE("sort matches brute force") {
    std::mt19937_64 g(21);
    std::uniform_int_distribution<int> obj(0, 12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Individual> pop;
        for (int i = 0; i < 200; ++i) {
            double v = u(g) < 0.2 ? std::floor(u(g) * 4.0) / 4.0 + 0.25 : 0.0;
            pop.push_back(point(obj(g), obj(g), v));
        }
        CHECK(ranks_of(non_dominated_sort(pop), pop.size()) == brute_ranks(pop));
    }
}

TEST_CASE("crowding distance") {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<Individual> two{point(0, 1), point(1, 0)};
    for (double d : crowding_distance(two, {0, 1})) CHECK(d == inf);

    std::vector<Individual> line{point(0, 4), point(1, 3), point(4, 0)};
    auto d = crowding_distance(line, {0, 1, 2});
    CHECK(d[0] == inf);
    CHECK(d[2] == inf);
    // (4 - 0) / 4 on each objective
    CHECK(d[1] == doctest::Approx(2.0));

    std::vector<Individual> four{point(0, 6), point(1, 4), point(3, 1), point(6, 0)};
    auto a = crowding_distance(four, {0, 1, 2, 3});
    const std::vector<int> order{3, 1, 0, 2};
    auto b = crowding_distance(four, order);
    for (int k = 0; k < 4; ++k) CHECK(b[k] == a[order[k]]);
    CHECK(a[1] == doctest::Approx(3.0 / 6.0 + 5.0 / 6.0));
    CHECK(a[2] == doctest::Approx(5.0 / 6.0 + 4.0 / 6.0));
}

TEST_CASE("hypervolume") {
    CHECK(hypervolume_2d({{0.0, 0.0}}, {1.0, 1.0}) == doctest::Approx(1.0));
    CHECK(hypervolume_2d({{0.5, 0.0}, {0.0, 0.5}}, {1.0, 1.0}) == doctest::Approx(0.75));
    CHECK(hypervolume_2d({{2.0, 2.0}}, {1.0, 1.0}) == 0.0);
}

TEST_CASE("constrained test problem") {
    const double ref_hv = corner_reference_hv();
    CHECK(std::abs(ref_hv - 0.5) < 1e-3);

    Nsga2Settings s;
    // a staircase of n points misses about 1/n of the area, so the front needs
    // well over 100 points to reach 1%
    s.population = 200;
    s.generations = 200;
    s.seed = 4;
    Nsga2Result r = run_nsga2(corner_problem(), s, 1);
    CHECK(r.feasible);
    std::vector<std::pair<double, double>> front;
    for (const Individual& x : r.front) {
        CHECK(x.feasible());
        front.emplace_back(x.objectives[0], x.objectives[1]);
    }
    for (size_t i = 0; i < r.front.size(); ++i)
        for (size_t j = 0; j < r.front.size(); ++j)
            if (i != j) CHECK_FALSE(constrained_dominates(r.front[i], r.front[j]));
    double hv = hypervolume_2d(front, {1.0, 1.0});
    CHECK(std::abs(hv - ref_hv) / ref_hv < 0.01);

    Nsga2Result again = run_nsga2(corner_problem(), s, 2);
    CHECK(again.log == r.log);
}

TEST_CASE("backup design evaluation") {
    ModelConfig c = test::ph_config(3, 2, 1, 2, 1, 2);
    BackupCandidate zero = evaluate_backup(c, 0, 0, 1.0, 1.0);
    CHECK(zero.p_e == doctest::Approx(1.0));
    CHECK_FALSE(zero.feasible());

    BackupCandidate a = evaluate_backup(c, 2, 1, 2.0, 3.0);
    BackupCandidate b = evaluate_backup(c, 2, 1, 2.0, 3.0);
    CHECK(a.p_e == b.p_e);
    CHECK(a.p_b_c == b.p_b_c);
    CHECK(a.p_preempt_emr == b.p_preempt_emr);
    CHECK(a.stable);

    CHECK_THROWS_AS(optimize_backup(c), ConfigError);
}
