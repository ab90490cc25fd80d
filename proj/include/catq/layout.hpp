#pragma once

#include "catq/config.hpp"

#include <array>
#include <map>
#include <vector>

namespace catq {

enum class StratumKind { Normal, RepairOnly, Backup };

// (handoff busy, new busy, repair channels down, emergency busy)
struct Stratum {
    int k1 = 0;
    int k2 = 0;
    int j = 0;
    int i = 0;
    StratumKind kind = StratumKind::Normal;
};

// Kronecker factor order inside every cell.
enum Factor { kV1 = 0, kV2, kPhH, kPhN, kPhE, kPhR, kPhO, kFactorCount };

struct Cell {
    Stratum s;
    std::array<int, kFactorCount> dims{};
    int dim = 0;
    int offset = 0;
};

struct LevelLayout {
    int level = 0;
    int dim = 0;
    std::vector<Cell> cells;
    std::map<std::array<int, 4>, int> lookup;

    // Cell index of a stratum, -1 if absent.
    int find(int k1, int k2, int j, int i) const;
    // Global index inside the level from the cell and per-factor indices.
    int state_index(int cell, const std::array<int, kFactorCount>& sub) const;
    std::array<int, kFactorCount> decode(int cell, int local) const;
};

// Orbit calls with an active retrial clock at level l.
inline int active_orbit(int l, int M) { return l < M ? l : M; }

LevelLayout level_layout(const ModelConfig& cfg, int l);

}  // namespace catq
