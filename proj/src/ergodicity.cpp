#include "catq/ergodicity.hpp"

#include <cmath>

#include "catq/csfp.hpp"
#include "catq/errors.hpp"
#include "catq/generator.hpp"
#include "catq/layout.hpp"

namespace catq {

LimitMatrices limit_matrices(const ModelConfig& cfg) {
    const int l = cfg.M + 1;
    LevelBlocks b = assemble_level(cfg, l);
    LevelLayout lay = level_layout(cfg, l);
    std::vector<Triplet> fold;
    SpMat d1 = to_sparse(cfg.catastrophe.d1);
    for (const Cell& c : lay.cells) {
        if (c.s.k1 + c.s.k2 == 0) continue;
        std::vector<SpMat> f;
        for (int k = 0; k < kFactorCount; ++k) f.push_back(k == kV2 ? d1 : sparse_identity(c.dims[k]));
        std::vector<const SpMat*> p;
        for (auto& m : f) p.push_back(&m);
        emit_kron(p, 1.0, c.offset, c.offset, fold);
    }
    LimitMatrices lm;
    lm.q0 = Mat(b.lower);
    lm.q2 = Mat(b.upper);
    lm.q1 = Mat(b.diag) + Mat(from_triplets(lay.dim, lay.dim, fold));
    // rebalance the diagonal against rounding
    Vec rs = (lm.q0 + lm.q1 + lm.q2).rowwise().sum();
    lm.q1.diagonal() -= rs;
    lm.t = lm.q1.diagonal().cwiseAbs();
    const Eigen::Index n = lm.t.size();
    Vec tinv = lm.t.unaryExpr([](double v) { return v > 0.0 ? 1.0 / v : 0.0; });
    lm.u0 = tinv.asDiagonal() * lm.q0;
    lm.u1 = tinv.asDiagonal() * lm.q1 + Mat::Identity(n, n);
    lm.u2 = tinv.asDiagonal() * lm.q2;
    for (Eigen::Index i = 0; i < n; ++i)
        if (lm.t(i) == 0.0) lm.u1(i, i) = 1.0;
    return lm;
}

ErgodicityVerdict check_ergodicity(const ModelConfig& cfg) {
    LimitMatrices lm = limit_matrices(cfg);
    ErgodicityVerdict v;
    v.x = stationary_distribution(lm.q0 + lm.q1 + lm.q2);
    if (!v.x.allFinite()) throw NumericalError("ergodicity: tail stationary vector is not finite");
    v.lhs = (v.x * lm.q2).sum();
    v.rhs = (v.x * lm.q0).sum();
    v.margin = v.rhs - v.lhs;
    v.stable = v.margin > 1e-12 * std::max(1.0, std::abs(v.rhs));

    // second route: add up the orbit-changing events cell by cell
    const int l = cfg.M + 1;
    LevelLayout lay = level_layout(cfg, l);
    const auto& an = cfg.arrivals_normal;
    const Vec h_out = an.mark(kHandoff).rowwise().sum();
    const Vec n_out = an.mark(kNew).rowwise().sum();
    const int o = active_orbit(l, cfg.M);
    const double rho = cfg.retrial.level_factor(l, cfg.M);
    RetrialBlocks rb = build_retrial_blocks(o, cfg.retrial);
    const Vec ab = rb.abandon * Vec::Ones(rb.abandon.cols());
    const Vec rt = rb.retry * Vec::Ones(rb.retry.cols());
    for (const Cell& c : lay.cells) {
        const int busy = c.s.k1 + c.s.k2;
        const bool full = busy == cfg.S;
        const int inner = c.dim / c.dims[kV1];
        const int orbit_dim = c.dims[kPhO];
        for (int idx = 0; idx < c.dim; ++idx) {
            const double p = v.x(c.offset + idx);
            const int v1 = idx / inner;
            const int ph = idx % orbit_dim;
            if (full) {
                v.event_lhs += p * n_out(v1);
                if (c.s.k1 < cfg.K2 && c.s.k2 >= 1) v.event_lhs += p * h_out(v1);
            }
            v.event_rhs += p * rho * ab(ph);
            if (!full) v.event_rhs += p * rho * rt(ph);
        }
    }
    const double ev_margin = v.event_rhs - v.event_lhs;
    const double tol = 1e-9 * std::max(1.0, std::abs(v.rhs));
    v.routes_agree = std::abs(ev_margin - v.margin) <= tol || (ev_margin > 0) == (v.margin > 0);
    v.lambda_total = total_arrival_rate(an);
    return v;
}

}  // namespace catq
