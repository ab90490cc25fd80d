// State-by-state enumeration of the truncated generator. Shares only the
// level layout with the Kronecker assembly; every rate is derived here from
// the explicit server configuration.
#include "catq/generator.hpp"

#include <cmath>
#include <stdexcept>

#include "catq/csfp.hpp"

namespace catq {

namespace {

struct State {
    int level = 0;
    Stratum s;
    int v1 = 0, v2 = 0;
    CountVector h, n, e, r, o;
};

class Oracle {
public:
    Oracle(const ModelConfig& c, int l_max) : cfg_(c), lmax_(l_max) {
        for (int l = 0; l <= l_max; ++l) {
            lay_.push_back(level_layout(c, l));
            off_.push_back(total_);
            total_ += lay_.back().dim;
            if (total_ > kMaxStates)
                throw std::length_error("enumerate_transitions_oracle: more than 200000 states");
        }
    }
    static constexpr int kMaxStates = 200000;

    TruncatedGenerator run() {
        for (int l = 0; l <= lmax_; ++l) {
            const LevelLayout& lay = lay_[l];
            for (int ci = 0; ci < static_cast<int>(lay.cells.size()); ++ci)
                for (int loc = 0; loc < lay.cells[ci].dim; ++loc) {
                    State st = decode(l, ci, loc);
                    src_ = off_[l] + lay.cells[ci].offset + loc;
                    row_sum_ = 0.0;
                    transitions(st);
                    t_.emplace_back(src_, src_, -row_sum_);
                }
        }
        TruncatedGenerator g;
        g.q = from_triplets(total_, total_, t_);
        g.level_offset = off_;
        g.level_offset.push_back(total_);
        return g;
    }

private:
    State decode(int l, int ci, int loc) const {
        const Cell& c = lay_[l].cells[ci];
        auto sub = lay_[l].decode(ci, loc);
        State st;
        st.level = l;
        st.s = c.s;
        st.v1 = sub[kV1];
        st.v2 = sub[kV2];
        const int o = c.s.kind == StratumKind::Normal ? active_orbit(l, cfg_.M) : 0;
        const int r = c.s.kind == StratumKind::Normal ? 0 : c.s.j;
        st.h = csfp_basis(c.s.k1, cfg_.service_h.dim()).states[sub[kPhH]];
        st.n = csfp_basis(c.s.k2, cfg_.service_n.dim()).states[sub[kPhN]];
        st.e = csfp_basis(c.s.i, cfg_.service_e.dim()).states[sub[kPhE]];
        st.r = csfp_basis(r, cfg_.repair.dim()).states[sub[kPhR]];
        st.o = csfp_basis(o, cfg_.retrial.dim()).states[sub[kPhO]];
        return st;
    }

    int encode(const State& st) const {
        const int l = std::min(st.level, lmax_);
        const LevelLayout& lay = lay_[l];
        const int ci = lay.find(st.s.k1, st.s.k2, st.s.j, st.s.i);
        if (ci < 0) throw std::logic_error("oracle: target stratum missing");
        std::array<int, kFactorCount> sub{};
        sub[kV1] = st.v1;
        sub[kV2] = st.v2;
        sub[kPhH] = csfp_basis(st.s.k1, cfg_.service_h.dim()).index_of(st.h);
        sub[kPhN] = csfp_basis(st.s.k2, cfg_.service_n.dim()).index_of(st.n);
        sub[kPhE] = csfp_basis(st.s.i, cfg_.service_e.dim()).index_of(st.e);
        const int r = st.s.kind == StratumKind::Normal ? 0 : st.s.j;
        sub[kPhR] = csfp_basis(r, cfg_.repair.dim()).index_of(st.r);
        sub[kPhO] = csfp_basis(static_cast<int>(sum(st.o)), cfg_.retrial.dim()).index_of(st.o);
        return off_[l] + lay.state_index(ci, sub);
    }

    static long sum(const CountVector& v) {
        long s = 0;
        for (int x : v) s += x;
        return s;
    }

    void add(const State& to, double rate) {
        if (rate == 0.0) return;
        int dst = encode(to);
        if (dst == src_) return;
        t_.emplace_back(src_, dst, rate);
        row_sum_ += rate;
    }

    // A call joins the orbit; it starts a retrial clock only if fewer than M are active.
    void join_orbit(State to, double rate) {
        to.level += 1;
        if (st_level_active(to.level - 1) < cfg_.M) {
            for (int q = 0; q < cfg_.retrial.dim(); ++q) {
                State t2 = to;
                t2.o[q] += 1;
                add(t2, rate * cfg_.retrial.gamma(q));
            }
        } else {
            add(to, rate);
        }
    }
    int st_level_active(int l) const { return active_orbit(l, cfg_.M); }

    // Orbit call in phase j leaves; a dormant call (if any) wakes up.
    void leave_orbit(State to, int j, double rate) {
        const bool dormant_left = to.level > cfg_.M;
        to.level -= 1;
        to.o[j] -= 1;
        if (dormant_left) {
            for (int q = 0; q < cfg_.retrial.dim(); ++q) {
                State t2 = to;
                t2.o[q] += 1;
                add(t2, rate * cfg_.retrial.gamma(q));
            }
        } else {
            add(to, rate);
        }
    }

    void start_in(State to, CountVector State::*field, const RowVec& beta, double rate) {
        for (int p = 0; p < beta.size(); ++p) {
            if (beta(p) == 0.0) continue;
            State t2 = to;
            (t2.*field)[p] += 1;
            add(t2, rate * beta(p));
        }
    }

    // Phase motion and completions of busy servers stored in `field`.
    void servers(const State& st, CountVector State::*field, const PhaseType& ph,
                 double scale, const Stratum& done) {
        const CountVector& v = st.*field;
        const Vec ex = ph.exit();
        for (int j = 0; j < ph.dim(); ++j) {
            if (v[j] == 0) continue;
            for (int k = 0; k < ph.dim(); ++k) {
                if (k == j) continue;
                State t = st;
                (t.*field)[j] -= 1;
                (t.*field)[k] += 1;
                add(t, scale * v[j] * ph.subgen(j, k));
            }
            State t = st;
            (t.*field)[j] -= 1;
            t.s = done;
            add(t, scale * v[j] * ex(j));
        }
    }

    // Removes one call from `field` chosen uniformly, then continues with `next`.
    template <class F>
    void remove_uniform(const State& st, CountVector State::*field, double rate, F next) {
        const CountVector& v = st.*field;
        const long tot = sum(v);
        for (size_t j = 0; j < v.size(); ++j) {
            if (v[j] == 0) continue;
            State t = st;
            (t.*field)[j] -= 1;
            next(t, rate * v[j] / static_cast<double>(tot));
        }
    }

    // Multinomial start of j repair channels.
    void repair_start(State to, int j, double rate) {
        const CsfpBasis& b = csfp_basis(j, cfg_.repair.dim());
        for (const CountVector& rv : b.states) {
            double p = std::tgamma(j + 1.0);
            for (size_t q = 0; q < rv.size(); ++q)
                p *= std::pow(cfg_.repair.beta(q), rv[q]) / std::tgamma(rv[q] + 1.0);
            State t = to;
            t.r = rv;
            add(t, rate * p);
        }
    }

    State empty_level0(const State& st) const {
        State t;
        t.level = 0;
        t.v1 = st.v1;
        t.v2 = st.v2;
        t.h.assign(cfg_.service_h.dim(), 0);
        t.n.assign(cfg_.service_n.dim(), 0);
        t.e.assign(cfg_.service_e.dim(), 0);
        t.r.assign(cfg_.repair.dim(), 0);
        t.o.assign(cfg_.retrial.dim(), 0);
        return t;
    }

    void transitions(const State& st) {
        switch (st.s.kind) {
            case StratumKind::Normal: normal(st); break;
            case StratumKind::RepairOnly: repair_only(st); break;
            case StratumKind::Backup: backup(st); break;
        }
    }

    void normal(const State& st) {
        const auto& an = cfg_.arrivals_normal;
        const int L1 = an.dim(), L2 = cfg_.catastrophe.dim();
        const int k1 = st.s.k1, k2 = st.s.k2, busy = k1 + k2, S = cfg_.S;
        const Mat H = an.mark(kHandoff), N = an.mark(kNew);
        for (int w = 0; w < L1; ++w) {
            if (w != st.v1) {
                State t = st;
                t.v1 = w;
                add(t, an.c0(st.v1, w));
            }
            State t = st;
            t.v1 = w;
            // handoff
            if (busy < S) {
                State u = t;
                u.s.k1 += 1;
                start_in(u, &State::h, cfg_.service_h.beta, H(st.v1, w));
            } else if (k1 < cfg_.K2 && k2 >= 1) {
                remove_uniform(t, &State::n, H(st.v1, w), [&](State u, double rate) {
                    u.s.k1 += 1;
                    u.s.k2 -= 1;
                    for (int p = 0; p < cfg_.service_h.dim(); ++p) {
                        State x = u;
                        x.h[p] += 1;
                        join_orbit(x, rate * cfg_.service_h.beta(p));
                    }
                });
            } else {
                add(t, H(st.v1, w));
            }
            // new call
            if (busy < S) {
                State u = t;
                u.s.k2 += 1;
                start_in(u, &State::n, cfg_.service_n.beta, N(st.v1, w));
            } else {
                join_orbit(t, N(st.v1, w));
            }
        }
        const Mat& D0 = cfg_.catastrophe.d0;
        const Mat& D1 = cfg_.catastrophe.d1;
        for (int w = 0; w < L2; ++w) {
            State t = st;
            t.v2 = w;
            if (w != st.v2) add(t, D0(st.v2, w));
            if (busy == 0) {
                add(t, D1(st.v2, w));
            } else {
                State u = empty_level0(t);
                u.s = busy < S ? Stratum{0, 0, busy, 0, StratumKind::RepairOnly}
                               : Stratum{0, 0, S, 0, StratumKind::Backup};
                repair_start(u, busy, D1(st.v2, w));
            }
        }
        Stratum sh = st.s, sn = st.s;
        sh.k1 -= 1;
        sn.k2 -= 1;
        servers(st, &State::h, cfg_.service_h, 1.0, sh);
        servers(st, &State::n, cfg_.service_n, 1.0, sn);

        const int M = cfg_.M;
        const double rho = cfg_.retrial.level_factor(st.level, M);
        const RetrialProcess& R = cfg_.retrial;
        for (int j = 0; j < R.dim(); ++j) {
            const int c = st.o[j];
            if (c == 0) continue;
            for (int k = 0; k < R.dim(); ++k) {
                if (k == j) continue;
                State t = st;
                t.o[j] -= 1;
                t.o[k] += 1;
                add(t, rho * c * R.subgen(j, k));
            }
            leave_orbit(st, j, rho * c * R.exit_abandon(j));
            const double rr = rho * c * R.exit_retry(j);
            if (busy < S) {
                for (int p = 0; p < cfg_.service_n.dim(); ++p) {
                    State t = st;
                    t.s.k2 += 1;
                    t.n[p] += 1;
                    leave_orbit(t, j, rr * cfg_.service_n.beta(p));
                }
            } else {
                // failed attempt: the call draws a fresh retrial phase
                for (int q = 0; q < R.dim(); ++q) {
                    State t = st;
                    t.o[j] -= 1;
                    t.o[q] += 1;
                    add(t, rr * R.gamma(q));
                }
            }
        }
    }

    void repair_only(const State& st) {
        const auto& ac = cfg_.arrivals_catastrophic;
        const Mat all = ac.generator();
        for (int w = 0; w < ac.dim(); ++w) {
            State t = st;
            t.v1 = w;
            add(t, all(st.v1, w));
        }
        const Mat D = cfg_.catastrophe.d0 + cfg_.catastrophe.d1;
        for (int w = 0; w < D.rows(); ++w) {
            State t = st;
            t.v2 = w;
            add(t, D(st.v2, w));
        }
        Stratum next = st.s.j >= 2 ? Stratum{0, 0, st.s.j - 1, 0, StratumKind::RepairOnly}
                                   : Stratum{0, 0, 0, 0, StratumKind::Normal};
        repair_completions(st, next);
    }

    void repair_completions(const State& st, const Stratum& next) {
        const PhaseType& B = cfg_.repair;
        const Vec ex = B.exit();
        for (int j = 0; j < B.dim(); ++j) {
            if (st.r[j] == 0) continue;
            for (int k = 0; k < B.dim(); ++k) {
                if (k == j) continue;
                State t = st;
                t.r[j] -= 1;
                t.r[k] += 1;
                add(t, st.r[j] * B.subgen(j, k));
            }
            State t = empty_level0(st);
            t.s = next;
            if (next.kind != StratumKind::Normal) {
                t.r = st.r;
                t.r[j] -= 1;
            }
            add(t, st.r[j] * ex(j));
        }
    }

    void backup(const State& st) {
        const auto& ac = cfg_.arrivals_catastrophic;
        const int k1 = st.s.k1, k2 = st.s.k2, i = st.s.i, K = cfg_.K, S = cfg_.S;
        const bool full = k1 + k2 + i >= K;
        const Mat H = ac.mark(kHandoff), N = ac.mark(kNew), E = ac.mark(kEmergency);
        for (int w = 0; w < ac.dim(); ++w) {
            State t = st;
            t.v1 = w;
            if (w != st.v1) add(t, ac.c0(st.v1, w));
            if (!full) {
                State u = t;
                u.s.k1 += 1;
                start_in(u, &State::h, cfg_.service_h.beta, H(st.v1, w));
                u = t;
                u.s.k2 += 1;
                start_in(u, &State::n, cfg_.service_n.beta, N(st.v1, w));
                u = t;
                u.s.i += 1;
                start_in(u, &State::e, cfg_.service_e.beta, E(st.v1, w));
            } else {
                add(t, H(st.v1, w));
                add(t, N(st.v1, w));
                auto start_e = [&](State u, double rate) {
                    u.s.i += 1;
                    start_in(u, &State::e, cfg_.service_e.beta, rate);
                };
                if (i < cfg_.K1 && k2 >= 1) {
                    remove_uniform(t, &State::n, E(st.v1, w), [&](State u, double rate) {
                        u.s.k2 -= 1;
                        start_e(u, rate);
                    });
                } else if (i < cfg_.K1 && k1 >= 1) {
                    remove_uniform(t, &State::h, E(st.v1, w), [&](State u, double rate) {
                        u.s.k1 -= 1;
                        start_e(u, rate);
                    });
                } else {
                    add(t, E(st.v1, w));
                }
            }
        }
        const Mat D = cfg_.catastrophe.d0 + cfg_.catastrophe.d1;
        for (int w = 0; w < D.rows(); ++w) {
            State t = st;
            t.v2 = w;
            add(t, D(st.v2, w));
        }
        const double sc = cfg_.backup_rate_scale;
        Stratum sh = st.s, sn = st.s, se = st.s;
        sh.k1 -= 1;
        sn.k2 -= 1;
        se.i -= 1;
        servers(st, &State::h, cfg_.service_h, sc, sh);
        servers(st, &State::n, cfg_.service_n, sc, sn);
        servers(st, &State::e, cfg_.service_e, sc, se);
        Stratum next = S >= 2 ? Stratum{0, 0, S - 1, 0, StratumKind::RepairOnly}
                              : Stratum{0, 0, 0, 0, StratumKind::Normal};
        repair_completions(st, next);
    }

    const ModelConfig& cfg_;
    int lmax_;
    std::vector<LevelLayout> lay_;
    std::vector<int> off_;
    int total_ = 0;
    std::vector<Triplet> t_;
    int src_ = 0;
    double row_sum_ = 0.0;
};

}  // namespace

TruncatedGenerator enumerate_transitions_oracle(const ModelConfig& cfg, int l_max) {
    if (l_max < cfg.M) throw std::invalid_argument("enumerate_transitions_oracle: requires l_max >= M");
    return Oracle(cfg, l_max).run();
}

}  // namespace catq
