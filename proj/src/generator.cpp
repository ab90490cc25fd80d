#include "catq/generator.hpp"

#include <cassert>
#include <cmath>
#include <iomanip>
#include <map>
#include <stdexcept>

#include "catq/csfp.hpp"
#include "catq/errors.hpp"

namespace catq {

namespace {

using Factors = std::array<const SpMat*, kFactorCount>;

// CSFP matrices of one model, built on demand.
class Pieces {
public:
    explicit Pieces(const ModelConfig& c) : cfg_(c) {}

    const SpMat& id(int n) { return get(ident_, n, [&] { return sparse_identity(n); }); }
    const SpMat& ones(int n) { return get(ones_, n, [&] { return ones_column(n); }); }

    const SpMat& P(const PhaseType& p, int n) { return get(cache(p, 'P'), n, [&] { return build_P(n, p.beta); }); }
    const SpMat& A(const PhaseType& p, int n, double scale = 1.0) {
        return get(cache(p, 'A', scale), n, [&] { return SpMat(scale * build_A(n, p.subgen)); });
    }
    const SpMat& L(const PhaseType& p, int n, double scale = 1.0) {
        return get(cache(p, 'L', scale), n, [&] { return SpMat(scale * build_L(n, p.exit())); });
    }
    const SpMat& removal(int n, int m) {
        return get(removal_[m], n, [&] { return build_removal(n, m); });
    }
    const SpMat& start_all(int n) {
        return get(start_all_, n, [&] { return build_start_all(n, cfg_.repair.beta); });
    }
    const RetrialBlocks& orbit(int o) {
        auto it = orbit_.find(o);
        if (it == orbit_.end()) it = orbit_.emplace(o, build_retrial_blocks(o, cfg_.retrial)).first;
        return it->second;
    }
    // Product kept alive by the cache.
    const SpMat& keep(SpMat m) {
        kept_.push_back(std::make_unique<SpMat>(std::move(m)));
        return *kept_.back();
    }

private:
    template <class F>
    const SpMat& get(std::map<int, SpMat>& m, int n, F make) {
        auto it = m.find(n);
        if (it == m.end()) it = m.emplace(n, make()).first;
        return it->second;
    }
    std::map<int, SpMat>& cache(const PhaseType& p, char kind, double scale = 1.0) {
        return ph_[{&p, kind, scale}];
    }

    const ModelConfig& cfg_;
    std::map<int, SpMat> ident_, ones_, start_all_;
    std::map<int, std::map<int, SpMat>> removal_;
    std::map<std::tuple<const PhaseType*, char, double>, std::map<int, SpMat>> ph_;
    std::map<int, RetrialBlocks> orbit_;
    std::vector<std::unique_ptr<SpMat>> kept_;
};

struct Sink {
    const LevelLayout* layout = nullptr;
    std::vector<Triplet> t;
};

class LevelBuilder {
public:
    LevelBuilder(const ModelConfig& c, int l) : cfg_(c), l_(l), pc_(c) {
        cur_ = level_layout(c, l);
        up_ = level_layout(c, l + 1);
        if (l > 0) down_ = level_layout(c, l - 1);
        zero_ = l == 0 ? cur_ : level_layout(c, 0);
        diag_.layout = &cur_;
        upper_.layout = &up_;
        lower_.layout = &down_;
        first_.layout = &zero_;
        m_c0n_ = to_sparse(c.arrivals_normal.c0);
        m_hn_ = to_sparse(c.arrivals_normal.mark(kHandoff));
        m_nn_ = to_sparse(c.arrivals_normal.mark(kNew));
        m_c0c_ = to_sparse(c.arrivals_catastrophic.c0);
        m_hc_ = to_sparse(c.arrivals_catastrophic.mark(kHandoff));
        m_nc_ = to_sparse(c.arrivals_catastrophic.mark(kNew));
        m_ec_ = to_sparse(c.arrivals_catastrophic.mark(kEmergency));
        m_allc_ = to_sparse(c.arrivals_catastrophic.generator());
        m_d0_ = to_sparse(c.catastrophe.d0);
        m_d1_ = to_sparse(c.catastrophe.d1);
        m_dall_ = to_sparse(c.catastrophe.d0 + c.catastrophe.d1);
    }

    LevelBlocks build() {
        for (int ci = 0; ci < static_cast<int>(cur_.cells.size()); ++ci) {
            switch (cur_.cells[ci].s.kind) {
                case StratumKind::Normal: normal(ci); break;
                case StratumKind::RepairOnly: repair_only(ci); break;
                case StratumKind::Backup: backup(ci); break;
            }
        }
        LevelBlocks b;
        b.level = l_;
        b.diag = from_triplets(cur_.dim, cur_.dim, diag_.t);
        b.upper = from_triplets(cur_.dim, up_.dim, upper_.t);
        b.lower = from_triplets(cur_.dim, l_ > 0 ? down_.dim : 0, lower_.t);
        b.first_col = from_triplets(cur_.dim, l_ > 0 ? zero_.dim : 0, first_.t);

        Vec rs = b.diag * Vec::Ones(cur_.dim) + b.upper * Vec::Ones(up_.dim);
        if (l_ > 0) rs += b.lower * Vec::Ones(down_.dim) + b.first_col * Vec::Ones(zero_.dim);
        double scale = 1.0;
        for (int i = 0; i < b.diag.outerSize(); ++i)
            for (SpMat::InnerIterator it(b.diag, i); it; ++it)
                if (it.row() == it.col()) scale = std::max(scale, std::abs(it.value()));
        b.delta_discrepancy = rs.cwiseAbs().maxCoeff();
        assert(b.delta_discrepancy <= 1e-10 * scale);
        // balance: every row of the level must sum to zero
        std::vector<Triplet> fix;
        for (int r = 0; r < cur_.dim; ++r)
            if (rs(r) != 0.0) fix.emplace_back(r, r, -rs(r));
        b.diag += from_triplets(cur_.dim, cur_.dim, fix);
        b.diag.makeCompressed();
        return b;
    }

private:
    void emit(Sink& s, int src_cell, int dst_cell, const Factors& f, double scale = 1.0) {
        if (dst_cell < 0) throw std::logic_error("generator: missing target stratum");
        std::vector<const SpMat*> v(f.begin(), f.end());
        emit_kron(v, scale, cur_.cells[src_cell].offset, s.layout->cells[dst_cell].offset, s.t);
    }
    Factors ids(const Cell& c) {
        Factors f;
        for (int k = 0; k < kFactorCount; ++k) f[k] = &pc_.id(c.dims[k]);
        return f;
    }

    void normal(int ci) {
        const Cell& c = cur_.cells[ci];
        const int k1 = c.s.k1, k2 = c.s.k2, n = k1 + k2, S = cfg_.S, M = cfg_.M;
        const int o = active_orbit(l_, M);
        const double rho = cfg_.retrial.level_factor(l_, M);
        const Factors I = ids(c);
        auto with = [&](std::initializer_list<std::pair<int, const SpMat*>> ch) {
            Factors f = I;
            for (auto& [k, m] : ch) f[k] = m;
            return f;
        };
        // a new orbit call: active while fewer than M calls retry
        const SpMat& up_orbit = l_ < M ? pc_.orbit(o + 1).restart : pc_.id(c.dims[kPhO]);

        emit(diag_, ci, ci, with({{kV1, &m_c0n_}}));
        // handoff arrival
        if (n < S)
            emit(diag_, ci, cur_.find(k1 + 1, k2, 0, 0), with({{kV1, &m_hn_}, {kPhH, &pc_.P(cfg_.service_h, k1)}}));
        else if (k1 < cfg_.K2 && k2 >= 1)
            emit(upper_, ci, up_.find(k1 + 1, k2 - 1, 0, 0),
                 with({{kV1, &m_hn_},
                       {kPhH, &pc_.P(cfg_.service_h, k1)},
                       {kPhN, &pc_.removal(k2, cfg_.service_n.dim())},
                       {kPhO, &up_orbit}}));
        else
            emit(diag_, ci, ci, with({{kV1, &m_hn_}}));
        // new-call arrival
        if (n < S)
            emit(diag_, ci, cur_.find(k1, k2 + 1, 0, 0), with({{kV1, &m_nn_}, {kPhN, &pc_.P(cfg_.service_n, k2)}}));
        else
            emit(upper_, ci, up_.find(k1, k2, 0, 0), with({{kV1, &m_nn_}, {kPhO, &up_orbit}}));
        // catastrophe clock
        emit(diag_, ci, ci, with({{kV2, &m_d0_}}));
        if (n == 0) {
            emit(diag_, ci, ci, with({{kV2, &m_d1_}}));
        } else {
            Sink& s = l_ == 0 ? diag_ : first_;
            int dst = n < S ? zero_.find(0, 0, n, 0) : zero_.find(0, 0, S, 0);
            emit(s, ci, dst,
                 with({{kV2, &m_d1_},
                       {kPhH, &pc_.ones(c.dims[kPhH])},
                       {kPhN, &pc_.ones(c.dims[kPhN])},
                       {kPhR, &pc_.start_all(n)},
                       {kPhO, &pc_.ones(c.dims[kPhO])}}));
        }
        // services
        emit(diag_, ci, ci, with({{kPhH, &pc_.A(cfg_.service_h, k1)}}));
        if (k1 >= 1)
            emit(diag_, ci, cur_.find(k1 - 1, k2, 0, 0), with({{kPhH, &pc_.L(cfg_.service_h, k1)}}));
        emit(diag_, ci, ci, with({{kPhN, &pc_.A(cfg_.service_n, k2)}}));
        if (k2 >= 1)
            emit(diag_, ci, cur_.find(k1, k2 - 1, 0, 0), with({{kPhN, &pc_.L(cfg_.service_n, k2)}}));
        // orbit
        if (o >= 1) {
            const RetrialBlocks& rb = pc_.orbit(o);
            emit(diag_, ci, ci, with({{kPhO, &rb.motion}}), rho);
            // leaving the orbit wakes a dormant call when there is one
            const SpMat& ab = l_ <= M ? rb.abandon : pc_.keep(SpMat(rb.abandon * rb.restart));
            const SpMat& rt = l_ <= M ? rb.retry : pc_.keep(SpMat(rb.retry * rb.restart));
            emit(lower_, ci, down_.find(k1, k2, 0, 0), with({{kPhO, &ab}}), rho);
            if (n < S) {
                emit(lower_, ci, down_.find(k1, k2 + 1, 0, 0),
                     with({{kPhN, &pc_.P(cfg_.service_n, k2)}, {kPhO, &rt}}), rho);
            } else {
                const SpMat& fail = pc_.keep(SpMat(rb.retry * rb.restart));
                emit(diag_, ci, ci, with({{kPhO, &fail}}), rho);
            }
        }
    }

    void repair_only(int ci) {
        const Cell& c = cur_.cells[ci];
        const int j = c.s.j;
        Factors f = ids(c);
        Factors g = f;
        g[kV1] = &m_allc_;
        emit(diag_, ci, ci, g);
        g = f;
        g[kV2] = &m_dall_;
        emit(diag_, ci, ci, g);
        g = f;
        g[kPhR] = &pc_.A(cfg_.repair, j);
        emit(diag_, ci, ci, g);
        g = f;
        g[kPhR] = &pc_.L(cfg_.repair, j);
        emit(diag_, ci, j >= 2 ? cur_.find(0, 0, j - 1, 0) : cur_.find(0, 0, 0, 0), g);
    }

    void backup(int ci) {
        const Cell& c = cur_.cells[ci];
        const int k1 = c.s.k1, k2 = c.s.k2, i = c.s.i, S = cfg_.S, K = cfg_.K;
        const int m = k1 + k2 + i;
        const double sc = cfg_.backup_rate_scale;
        const Factors I = ids(c);
        auto with = [&](std::initializer_list<std::pair<int, const SpMat*>> ch) {
            Factors f = I;
            for (auto& [k, mm] : ch) f[k] = mm;
            return f;
        };
        emit(diag_, ci, ci, with({{kV1, &m_c0c_}}));
        if (m < K) {
            emit(diag_, ci, cur_.find(k1 + 1, k2, S, i), with({{kV1, &m_hc_}, {kPhH, &pc_.P(cfg_.service_h, k1)}}));
            emit(diag_, ci, cur_.find(k1, k2 + 1, S, i), with({{kV1, &m_nc_}, {kPhN, &pc_.P(cfg_.service_n, k2)}}));
            emit(diag_, ci, cur_.find(k1, k2, S, i + 1), with({{kV1, &m_ec_}, {kPhE, &pc_.P(cfg_.service_e, i)}}));
        } else {
            emit(diag_, ci, ci, with({{kV1, &m_hc_}}));
            emit(diag_, ci, ci, with({{kV1, &m_nc_}}));
            if (i < cfg_.K1 && k2 >= 1)
                emit(diag_, ci, cur_.find(k1, k2 - 1, S, i + 1),
                     with({{kV1, &m_ec_},
                           {kPhN, &pc_.removal(k2, cfg_.service_n.dim())},
                           {kPhE, &pc_.P(cfg_.service_e, i)}}));
            else if (i < cfg_.K1 && k1 >= 1)
                emit(diag_, ci, cur_.find(k1 - 1, k2, S, i + 1),
                     with({{kV1, &m_ec_},
                           {kPhH, &pc_.removal(k1, cfg_.service_h.dim())},
                           {kPhE, &pc_.P(cfg_.service_e, i)}}));
            else
                emit(diag_, ci, ci, with({{kV1, &m_ec_}}));
        }
        emit(diag_, ci, ci, with({{kV2, &m_dall_}}));
        emit(diag_, ci, ci, with({{kPhH, &pc_.A(cfg_.service_h, k1, sc)}}));
        emit(diag_, ci, ci, with({{kPhN, &pc_.A(cfg_.service_n, k2, sc)}}));
        emit(diag_, ci, ci, with({{kPhE, &pc_.A(cfg_.service_e, i, sc)}}));
        if (k1 >= 1)
            emit(diag_, ci, cur_.find(k1 - 1, k2, S, i), with({{kPhH, &pc_.L(cfg_.service_h, k1, sc)}}));
        if (k2 >= 1)
            emit(diag_, ci, cur_.find(k1, k2 - 1, S, i), with({{kPhN, &pc_.L(cfg_.service_n, k2, sc)}}));
        if (i >= 1)
            emit(diag_, ci, cur_.find(k1, k2, S, i - 1), with({{kPhE, &pc_.L(cfg_.service_e, i, sc)}}));
        // repair: the first completion ends backup mode and drops its calls
        emit(diag_, ci, ci, with({{kPhR, &pc_.A(cfg_.repair, S)}}));
        emit(diag_, ci, S >= 2 ? cur_.find(0, 0, S - 1, 0) : cur_.find(0, 0, 0, 0),
             with({{kPhH, &pc_.ones(c.dims[kPhH])},
                   {kPhN, &pc_.ones(c.dims[kPhN])},
                   {kPhE, &pc_.ones(c.dims[kPhE])},
                   {kPhR, &pc_.L(cfg_.repair, S)}}));
    }

    const ModelConfig& cfg_;
    int l_;
    Pieces pc_;
    LevelLayout cur_, up_, down_, zero_;
    Sink diag_, upper_, lower_, first_;
    SpMat m_c0n_, m_hn_, m_nn_, m_c0c_, m_hc_, m_nc_, m_ec_, m_allc_, m_d0_, m_d1_, m_dall_;
};

}  // namespace

LevelBlocks assemble_level(const ModelConfig& cfg, int l) {
    if (l < 0) throw std::invalid_argument("assemble_level: negative level");
    return LevelBuilder(cfg, l).build();
}

SpMat assemble_upper(const ModelConfig& cfg, int l) { return assemble_level(cfg, l).upper; }
SpMat assemble_diag(const ModelConfig& cfg, int l) { return assemble_level(cfg, l).diag; }
SpMat assemble_lower(const ModelConfig& cfg, int l) {
    if (l < 1) throw std::invalid_argument("assemble_lower: requires l >= 1");
    return assemble_level(cfg, l).lower;
}
SpMat assemble_first_col(const ModelConfig& cfg, int l) { return assemble_level(cfg, l).first_col; }

TruncatedGenerator assemble_truncated(const ModelConfig& cfg, int l_max) {
    if (l_max < cfg.M) throw std::invalid_argument("assemble_truncated: requires l_max >= M");
    TruncatedGenerator g;
    g.level_offset.push_back(0);
    for (int l = 0; l <= l_max; ++l) g.level_offset.push_back(g.level_offset.back() + level_layout(cfg, l).dim);
    const int n = g.level_offset.back();
    std::vector<Triplet> t;
    auto put = [&](const SpMat& m, int r0, int c0) {
        for (int i = 0; i < m.outerSize(); ++i)
            for (SpMat::InnerIterator it(m, i); it; ++it)
                t.emplace_back(r0 + static_cast<int>(it.row()), c0 + static_cast<int>(it.col()), it.value());
    };
    LevelBlocks tail;
    bool have_tail = false;
    for (int l = 0; l <= l_max; ++l) {
        const LevelBlocks* b;
        LevelBlocks fresh;
        if (l > cfg.M + 1 && have_tail) {
            b = &tail;
        } else {
            fresh = assemble_level(cfg, l);
            if (l == cfg.M + 1) {
                tail = fresh;
                have_tail = true;
            }
            b = &fresh;
        }
        const int r0 = g.level_offset[l];
        put(b->diag, r0, r0);
        if (l < l_max) put(b->upper, r0, g.level_offset[l + 1]);
        else put(b->upper, r0, r0);
        if (l > 0) {
            put(b->lower, r0, g.level_offset[l - 1]);
            put(b->first_col, r0, 0);
        }
    }
    g.q = from_triplets(n, n, t);
    return g;
}

void write_matrix_market(std::ostream& os, const SpMat& a) {
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
    os << std::setprecision(17);
    for (int i = 0; i < a.outerSize(); ++i)
        for (SpMat::InnerIterator it(a, i); it; ++it)
            os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

}  // namespace catq
