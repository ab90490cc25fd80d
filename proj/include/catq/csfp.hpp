#pragma once

#include "catq/linalg.hpp"
#include "catq/processes.hpp"

#include <map>
#include <vector>

namespace catq {

using CountVector = std::vector<int>;

// All ways to place n servers in m phases, lexicographically descending:
// (n,0,...,0) first, (0,...,0,n) last.
struct CsfpBasis {
    int n = 0;
    int m = 0;
    std::vector<CountVector> states;
    std::map<CountVector, int> index;

    int size() const { return static_cast<int>(states.size()); }
    int index_of(const CountVector& s) const;
};

// C(m+n-1, n)
long csfp_count(int n, int m);
// Cached, thread safe.
const CsfpBasis& csfp_basis(int n, int m);

// Start one service in phase j w.p. beta_j: T_n x T_{n+1}.
SpMat build_P(int n, const RowVec& beta);
// Phase motion of n busy servers with subgenerator a (diagonal included): T_n x T_n.
SpMat build_A(int n, const Mat& a);
// One completion out of phase j at rate s_j * exit_j: T_n x T_{n-1}.
SpMat build_L(int n, const Vec& exit);
// Remove one of the n servers picked uniformly at random: T_n x T_{n-1}.
SpMat build_removal(int n, int m);
// Phase distribution of n servers that all start independently from beta: 1 x T_n.
SpMat build_start_all(int n, const RowVec& beta);

struct RetrialBlocks {
    SpMat motion;        // T_n x T_n
    SpMat abandon;       // T_n x T_{n-1}
    SpMat retry;         // T_n x T_{n-1}
    SpMat restart;       // T_{n-1} x T_n, a new call starting from gamma
    SpMat join;          // T_n x T_{n+1}, one more call joining from gamma
};
RetrialBlocks build_retrial_blocks(int n, const RetrialProcess& r);

}  // namespace catq
