#pragma once

#include "catq/config.hpp"

namespace catq {

// Blocks of the level-independent tail (levels above M) and their
// uniformized form U = T^{-1} Q (+ I on the diagonal block).
struct LimitMatrices {
    Mat q0, q1, q2;
    Mat u0, u1, u2;
    Vec t;
};

// Catastrophes leave the orbit level unchanged in the tail view: their
// first-column mass is kept inside q1 as a pure phase change.
LimitMatrices limit_matrices(const ModelConfig& cfg);

struct ErgodicityVerdict {
    bool stable = false;
    double lhs = 0.0;         // x q2 e: rate of joining the orbit
    double rhs = 0.0;         // x q0 e: rate of leaving the orbit
    double margin = 0.0;      // rhs - lhs
    double event_lhs = 0.0;   // same two rates summed event by event
    double event_rhs = 0.0;
    bool routes_agree = true;
    double lambda_total = 0.0;  // lambda_H + lambda_N of the normal arrivals
    RowVec x;
};

ErgodicityVerdict check_ergodicity(const ModelConfig& cfg);

}  // namespace catq
