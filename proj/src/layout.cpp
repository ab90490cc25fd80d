#include "catq/layout.hpp"

#include <stdexcept>

#include "catq/csfp.hpp"

namespace catq {

int LevelLayout::find(int k1, int k2, int j, int i) const {
    auto it = lookup.find({k1, k2, j, i});
    return it == lookup.end() ? -1 : it->second;
}

int LevelLayout::state_index(int cell, const std::array<int, kFactorCount>& sub) const {
    const Cell& c = cells.at(cell);
    int idx = 0;
    for (int f = 0; f < kFactorCount; ++f) idx = idx * c.dims[f] + sub[f];
    return c.offset + idx;
}

std::array<int, kFactorCount> LevelLayout::decode(int cell, int local) const {
    const Cell& c = cells.at(cell);
    std::array<int, kFactorCount> sub{};
    for (int f = kFactorCount; f-- > 0;) {
        sub[f] = local % c.dims[f];
        local /= c.dims[f];
    }
    return sub;
}

LevelLayout level_layout(const ModelConfig& cfg, int l) {
    if (l < 0) throw std::invalid_argument("level_layout: negative level");
    const int L1 = cfg.arrivals_normal.dim(), L2 = cfg.catastrophe.dim();
    const int mh = cfg.service_h.dim(), mn = cfg.service_n.dim(), me = cfg.service_e.dim();
    const int mr = cfg.repair.dim(), mo = cfg.retrial.dim();
    const int o = active_orbit(l, cfg.M);

    LevelLayout lay;
    lay.level = l;
    auto push = [&](Stratum s, std::array<int, kFactorCount> dims) {
        Cell c;
        c.s = s;
        c.dims = dims;
        c.dim = 1;
        for (int d : dims) c.dim *= d;
        c.offset = lay.dim;
        lay.dim += c.dim;
        lay.lookup[{s.k1, s.k2, s.j, s.i}] = static_cast<int>(lay.cells.size());
        lay.cells.push_back(c);
    };
    auto T = [](int n, int m) { return static_cast<int>(csfp_count(n, m)); };

    for (int k1 = 0; k1 <= cfg.S; ++k1)
        for (int k2 = 0; k1 + k2 <= cfg.S; ++k2) {
            push({k1, k2, 0, 0, StratumKind::Normal},
                 {L1, L2, T(k1, mh), T(k2, mn), 1, 1, T(o, mo)});
            if (l != 0) continue;
            if (k1 == 0 && k2 == 0)
                for (int j = 1; j < cfg.S; ++j)
                    push({0, 0, j, 0, StratumKind::RepairOnly}, {L1, L2, 1, 1, 1, T(j, mr), 1});
            for (int i = 0; k1 + k2 + i <= cfg.K; ++i)
                push({k1, k2, cfg.S, i, StratumKind::Backup},
                     {L1, L2, T(k1, mh), T(k2, mn), T(i, me), T(cfg.S, mr), 1});
        }
    return lay;
}

}  // namespace catq
