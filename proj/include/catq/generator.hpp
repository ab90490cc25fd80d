#pragma once

#include "catq/config.hpp"
#include "catq/layout.hpp"

#include <ostream>
#include <vector>

namespace catq {

// Blocks of one block row of the generator. `lower` maps level l to l-1,
// `upper` to l+1 and `first_col` to level 0 by catastrophe (empty at l = 0,
// where catastrophes stay inside `diag`).
struct LevelBlocks {
    int level = 0;
    SpMat lower;
    SpMat diag;
    SpMat upper;
    SpMat first_col;
    // max |row sum| before the diagonal was rebalanced
    double delta_discrepancy = 0.0;
};

LevelBlocks assemble_level(const ModelConfig& cfg, int l);
SpMat assemble_upper(const ModelConfig& cfg, int l);
SpMat assemble_lower(const ModelConfig& cfg, int l);
SpMat assemble_diag(const ModelConfig& cfg, int l);
SpMat assemble_first_col(const ModelConfig& cfg, int l);

// Generator on levels 0..l_max with upward moves out of l_max folded back into
// level l_max. Requires l_max >= M.
struct TruncatedGenerator {
    SpMat q;
    std::vector<int> level_offset;  // size l_max + 2
};
TruncatedGenerator assemble_truncated(const ModelConfig& cfg, int l_max);

// Independent state-by-state construction of the same truncated generator.
TruncatedGenerator enumerate_transitions_oracle(const ModelConfig& cfg, int l_max);

void write_matrix_market(std::ostream& os, const SpMat& a);

}  // namespace catq
