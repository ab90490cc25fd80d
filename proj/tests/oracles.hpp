#pragma once

// Independent reference constructions shared by the unit and acceptance tests.

#include <functional>
#include <vector>

#include "catq/csfp.hpp"
#include "catq/nsga2.hpp"

namespace catq::test {

// Track-phase representation: server k is in phase t[k].
using Tuple = std::vector<int>;

inline std::vector<Tuple> tuples(int n, int m) {
    std::vector<Tuple> out;
    Tuple t(n, 0);
    for (;;) {
        out.push_back(t);
        int k = n - 1;
        while (k >= 0 && t[k] == m - 1) t[k--] = 0;
        if (k < 0) break;
        ++t[k];
    }
    if (n == 0) out.resize(1);
    return out;
}

inline CountVector counts(const Tuple& t, int m) {
    CountVector c(m, 0);
    for (int x : t) ++c[x];
    return c;
}

// Lumps a track-phase matrix (rows over n-tuples, columns over n2-tuples)
// onto count vectors, reading each row from one representative tuple.
inline Mat lump(int n, int n2, int m, const std::function<double(const Tuple&, const Tuple&)>& rate) {
    const CsfpBasis& br = csfp_basis(n, m);
    const CsfpBasis& bc = csfp_basis(n2, m);
    Mat out = Mat::Zero(br.size(), bc.size());
    std::vector<bool> done(br.size(), false);
    for (const Tuple& t : tuples(n, m)) {
        int r = br.index_of(counts(t, m));
        if (done[r]) continue;
        done[r] = true;
        for (const Tuple& u : tuples(n2, m)) out(r, bc.index_of(counts(u, m))) += rate(t, u);
    }
    return out;
}

inline Tuple erase(const Tuple& t, size_t k) {
    Tuple r = t;
    r.erase(r.begin() + static_cast<long>(k));
    return r;
}

// Kronecker sum A + A + ... over n servers.
inline Mat lumped_motion(int n, const Mat& a) {
    return lump(n, n, static_cast<int>(a.rows()), [&](const Tuple& t, const Tuple& u) {
        int diff = 0, at = -1;
        for (size_t k = 0; k < t.size(); ++k)
            if (t[k] != u[k]) ++diff, at = static_cast<int>(k);
        if (diff > 1) return 0.0;
        if (diff == 1) return a(t[at], u[at]);
        double d = 0.0;
        for (int x : t) d += a(x, x);
        return d;
    });
}

// Each of the n servers completes from its phase at rate exit(phase).
inline Mat lumped_completion(int n, const Vec& exit) {
    return lump(n, n - 1, static_cast<int>(exit.size()), [&](const Tuple& t, const Tuple& u) {
        double r = 0.0;
        for (size_t k = 0; k < t.size(); ++k)
            if (erase(t, k) == u) r += exit(t[k]);
        return r;
    });
}

inline double max_diff(const SpMat& a, const Mat& b) { return (Mat(a) - b).cwiseAbs().maxCoeff(); }

inline bool brute_dominates(const Individual& a, const Individual& b) {
    if (a.feasible() != b.feasible()) return a.feasible();
    if (!a.feasible()) return a.violation < b.violation;
    bool strict = false;
    for (size_t k = 0; k < a.objectives.size(); ++k) {
        if (a.objectives[k] > b.objectives[k]) return false;
        if (a.objectives[k] < b.objectives[k]) strict = true;
    }
    return strict;
}

// Rank by repeatedly peeling the non-dominated set.
inline std::vector<int> brute_ranks(const std::vector<Individual>& pop) {
    const int n = static_cast<int>(pop.size());
    std::vector<int> rank(n, -1);
    int assigned = 0;
    for (int r = 0; assigned < n; ++r) {
        std::vector<int> layer;
        for (int i = 0; i < n; ++i) {
            if (rank[i] >= 0) continue;
            bool dominated = false;
            for (int j = 0; j < n && !dominated; ++j)
                if (j != i && rank[j] < 0 && brute_dominates(pop[j], pop[i])) dominated = true;
            if (!dominated) layer.push_back(i);
        }
        for (int i : layer) rank[i] = r;
        assigned += static_cast<int>(layer.size());
    }
    return rank;
}

inline std::vector<int> ranks_of(const std::vector<std::vector<int>>& fronts, size_t n) {
    std::vector<int> got(n, -1);
    for (size_t r = 0; r < fronts.size(); ++r)
        for (int i : fronts[r]) got[i] = static_cast<int>(r);
    return got;
}

// min (x1, x2) subject to x1 + x2 >= 1 on the unit square.
inline Problem corner_problem() {
    Problem p;
    p.real_bounds = {{0.0, 1.0}, {0.0, 1.0}};
    p.evaluate = [](Individual& x) {
        x.objectives = {x.reals[0], x.reals[1]};
        x.violation = std::max(0.0, 1.0 - x.reals[0] - x.reals[1]);
    };
    return p;
}

// Hypervolume of the true front x1 + x2 = 1 from a dense grid.
inline double corner_reference_hv(int n = 2000) {
    std::vector<std::pair<double, double>> grid;
    for (int i = 0; i <= n; ++i) {
        double x = static_cast<double>(i) / n;
        grid.emplace_back(x, 1.0 - x);
    }
    return hypervolume_2d(grid, {1.0, 1.0});
}

}  // namespace catq::test
