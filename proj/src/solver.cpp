#include "catq/solver.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <memory>

#include "catq/ergodicity.hpp"
#include "catq/errors.hpp"
#include "catq/generator.hpp"
#include "catq/layout.hpp"

namespace catq {

namespace {

// Level blocks, cached up to M+1; every higher level repeats M+1.
class Levels {
public:
    explicit Levels(const ModelConfig& c) : cfg_(c) {}

    const LevelBlocks& blocks(int l) {
        const int k = std::min(l, cfg_.M + 1);
        while (static_cast<int>(b_.size()) <= k) {
            b_.push_back(assemble_level(cfg_, static_cast<int>(b_.size())));
            d_.push_back(Mat(b_.back().diag));
        }
        return b_[k];
    }
    const Mat& diag(int l) {
        blocks(l);
        return d_[std::min(l, cfg_.M + 1)];
    }
    int dim(int l) { return static_cast<int>(blocks(l).diag.rows()); }

private:
    const ModelConfig& cfg_;
    std::vector<LevelBlocks> b_;
    std::vector<Mat> d_;
};

// G_l from G_{l+1}: -(Q_{l+1,l+1} + Q_{l+1,l+2} G_{l+1})^{-1} Q_{l+1,l}
Mat g_step(Levels& lv, int l, const Mat& g_up) {
    const LevelBlocks& b = lv.blocks(l + 1);
    Mat n = lv.diag(l + 1);
    n.noalias() += b.upper * g_up;
    Eigen::PartialPivLU<Mat> lu(n);
    Mat g = -lu.solve(Mat(b.lower));
    if (!g.allFinite()) throw NumericalError("G recursion: singular level matrix");
    return g;
}

Mat seed(Levels& lv, int top, bool identity) {
    const int r = lv.dim(top + 1), c = lv.dim(top);
    return identity ? Mat(Mat::Identity(r, c)) : Mat(Mat::Zero(r, c));
}

struct Scan {
    int kappa = 0;
    Mat g;
};

// Seed iterates over the level-independent part (kappa >= M). They depend only
// on the number of steps taken, so a larger window continues where the last
// one stopped. Only the rows of G hit by the upper block are carried; the full
// matrices are formed when those rows agree.
struct TailIterates {
    bool ready = false;
    std::vector<int> rows;  // nonzero columns of the repeating upper block
    SpMat upper_r;          // those columns of the upper block
    int steps = 0;
    Mat g1, g2;             // restricted iterates
    std::shared_ptr<Eigen::PartialPivLU<Mat>> lu1, lu2;
    int converged_at = -1;
    Mat converged_g;
};

void tail_init(const ModelConfig& cfg, Levels& lv, TailIterates& t) {
    const LevelBlocks& b = lv.blocks(cfg.M + 1);
    std::vector<char> used(b.upper.cols(), 0);
    for (int i = 0; i < b.upper.outerSize(); ++i)
        for (SpMat::InnerIterator it(b.upper, i); it; ++it) used[it.col()] = 1;
    t.rows.clear();
    for (int c = 0; c < static_cast<int>(used.size()); ++c)
        if (used[c]) t.rows.push_back(c);
    std::vector<Triplet> tr;
    std::vector<int> pos(used.size(), -1);
    for (size_t k = 0; k < t.rows.size(); ++k) pos[t.rows[k]] = static_cast<int>(k);
    for (int i = 0; i < b.upper.outerSize(); ++i)
        for (SpMat::InnerIterator it(b.upper, i); it; ++it)
            tr.emplace_back(static_cast<int>(it.row()), pos[it.col()], it.value());
    t.upper_r = from_triplets(static_cast<int>(b.upper.rows()), static_cast<int>(t.rows.size()), tr);
    const int n = static_cast<int>(b.diag.rows());
    t.steps = 0;
    t.g1 = Mat::Zero(static_cast<Eigen::Index>(t.rows.size()), n);
    t.g2 = Mat::Zero(static_cast<Eigen::Index>(t.rows.size()), n);
    for (size_t k = 0; k < t.rows.size(); ++k) t.g2(static_cast<Eigen::Index>(k), t.rows[k]) = 1.0;
    t.lu1.reset();
    t.lu2.reset();
    t.converged_at = -1;
    t.ready = true;
}

std::shared_ptr<Eigen::PartialPivLU<Mat>> tail_step(const ModelConfig& cfg, Levels& lv, const TailIterates& t,
                                                     Mat& g) {
    const LevelBlocks& b = lv.blocks(cfg.M + 1);
    Mat n = lv.diag(cfg.M + 1);
    n.noalias() += t.upper_r * g;
    auto lu = std::make_shared<Eigen::PartialPivLU<Mat>>(n);
    Mat sel = Mat::Zero(n.rows(), static_cast<Eigen::Index>(t.rows.size()));
    for (size_t k = 0; k < t.rows.size(); ++k) sel(t.rows[k], static_cast<Eigen::Index>(k)) = 1.0;
    Mat y = lu->transpose().solve(sel);
    g.noalias() = -(y.transpose() * b.lower);
    if (!g.allFinite()) throw NumericalError("G recursion: singular level matrix");
    return lu;
}

Mat full_g(const ModelConfig& cfg, Levels& lv, const Eigen::PartialPivLU<Mat>& lu) {
    Mat g = -lu.solve(Mat(lv.blocks(cfg.M + 1).lower));
    if (!g.allFinite()) throw NumericalError("G recursion: singular level matrix");
    return g;
}

// Scans down from the window top until the two seeds agree.
Scan scan_window(const ModelConfig& cfg, Levels& lv, TailIterates& tail, int& i0, int& s, int floor_level,
                 int& extensions) {
    for (;;) {
        const int top = std::max({i0 - 1 + s, cfg.M, floor_level + 1});
        if (top > cfg.solver.max_level)
            throw NumericalError("G recursion: window exceeds solver.max_level (" +
                                 std::to_string(cfg.solver.max_level) + ")");
        const int bottom = std::max(i0 - 1, floor_level);
        const int hom_bottom = std::max(bottom, cfg.M);
        const int need = top - hom_bottom;

        if (tail.converged_at >= 0 && tail.converged_at <= need) return {top - tail.converged_at, tail.converged_g};
        if (!tail.ready || tail.steps > need) tail_init(cfg, lv, tail);
        while (tail.steps < need) {
            const int k = top - tail.steps - 1;
            tail.lu1 = tail_step(cfg, lv, tail, tail.g1);
            tail.lu2 = tail_step(cfg, lv, tail, tail.g2);
            ++tail.steps;
            if (max_abs_diff(tail.g1, tail.g2) < cfg.solver.eps_g) {
                Mat f1 = full_g(cfg, lv, *tail.lu1);
                if (max_abs_diff(f1, full_g(cfg, lv, *tail.lu2)) < cfg.solver.eps_g) {
                    tail.converged_at = tail.steps;
                    tail.converged_g = f1;
                    return {k, std::move(f1)};
                }
            }
        }
        if (hom_bottom > bottom) {
            Mat g1, g2;
            if (tail.steps == 0) {
                g1 = seed(lv, top, false);
                g2 = seed(lv, top, true);
            } else {
                g1 = full_g(cfg, lv, *tail.lu1);
                g2 = full_g(cfg, lv, *tail.lu2);
            }
            for (int k = hom_bottom - 1; k >= bottom; --k) {
                g1 = g_step(lv, k, g1);
                g2 = g_step(lv, k, g2);
                if (max_abs_diff(g1, g2) < cfg.solver.eps_g) return {k, std::move(g1)};
            }
        }
        s *= 2;
        ++extensions;
    }
}

}  // namespace

double StationaryDistribution::total_mass() const {
    double m = 0.0;
    for (const auto& v : z) m += v.sum();
    return m;
}

ModelConfig exponential_surrogate(const ModelConfig& cfg) {
    ModelConfig e = cfg;
    auto mmap = [](const MarkedArrivalProcess& m) {
        MarkedArrivalProcess p;
        double tot = 0.0;
        for (size_t k = 0; k < m.marks.size(); ++k) {
            double r = class_arrival_rate(m, static_cast<int>(k));
            p.marks.push_back(Mat::Constant(1, 1, r));
            tot += r;
        }
        p.c0 = Mat::Constant(1, 1, -tot);
        return p;
    };
    e.arrivals_normal = mmap(cfg.arrivals_normal);
    e.arrivals_catastrophic = mmap(cfg.arrivals_catastrophic);
    double c = catastrophe_rate(cfg.catastrophe);
    e.catastrophe = {Mat::Constant(1, 1, -c), Mat::Constant(1, 1, c)};
    e.service_h = exponential_ph(ph_fundamental_rate(cfg.service_h));
    e.service_n = exponential_ph(ph_fundamental_rate(cfg.service_n));
    e.service_e = exponential_ph(ph_fundamental_rate(cfg.service_e));
    e.repair = exponential_ph(ph_fundamental_rate(cfg.repair));
    const RetrialProcess& r = cfg.retrial;
    Vec mean_time = (-r.subgen).partialPivLu().solve(r.exit_abandon);
    double p_ab = std::clamp(static_cast<double>(r.gamma * mean_time), 0.0, 1.0);
    RetrialProcess er = make_retrial(RowVec::Ones(1), Mat::Constant(1, 1, -1.0), r.theta(), p_ab);
    er.level_rates = r.level_rates;
    e.retrial = er;
    return e;
}

int choose_initial_level(const ModelConfig& cfg) {
    ModelConfig sur = exponential_surrogate(cfg);
    if (!check_ergodicity(sur).stable) throw UnstableError("surrogate model is unstable");
    int l_max = std::max(64, sur.M + 1);
    const int cap = std::max(l_max, cfg.solver.max_level);
    StationaryDistribution d;
    for (;;) {
        d = direct_truncated_solve(sur, l_max);
        if (d.z.back().sum() < cfg.solver.delta * 1e-3 || l_max >= cap) break;
        l_max = std::min(2 * l_max, cap);
    }
    for (int i = 1; i < d.levels(); ++i)
        if (d.z[i].cwiseAbs().sum() < cfg.solver.delta) return i;
    return l_max;
}

GRecursion g_recursion(const ModelConfig& cfg, int i0, int s) {
    Levels lv(cfg);
    TailIterates tail;
    int ext = 0;
    Scan sc = scan_window(cfg, lv, tail, i0, s, 1, ext);
    GRecursion out;
    out.kappa = sc.kappa;
    out.s = s;
    out.G[sc.kappa] = sc.g;
    for (int l = sc.kappa - 1; l >= 0; --l) out.G[l] = g_step(lv, l, out.G[l + 1]);
    return out;
}

StationaryDistribution solve_stationary(const ModelConfig& cfg) {
    ErgodicityVerdict ev = check_ergodicity(cfg);
    if (!ev.stable) throw UnstableError("model is not ergodic: orbit inflow " + std::to_string(ev.lhs) +
                                        " >= outflow " + std::to_string(ev.rhs));
    Levels lv(cfg);
    TailIterates tail;
    StationaryDistribution out;
    int i0 = choose_initial_level(cfg);
    out.i0 = i0;
    int s = cfg.solver.s_multiplier * i0;
    int i_f = -1;

    // level-0 columns reached by catastrophes from above level 1
    std::vector<int> cat_cols;
    {
        std::vector<char> seen(lv.dim(0), 0);
        for (int l = 1; l <= cfg.M + 1; ++l) {
            const SpMat& fl = lv.blocks(l).first_col;
            for (int i = 0; i < fl.outerSize(); ++i)
                for (SpMat::InnerIterator it(fl, i); it; ++it) seen[it.col()] = 1;
        }
        for (int c = 0; c < lv.dim(0); ++c)
            if (seen[c]) cat_cols.push_back(c);
    }
    auto first_dense = [&](int l) {
        const SpMat& fl = lv.blocks(l).first_col;
        Mat m = Mat::Zero(fl.rows(), static_cast<Eigen::Index>(cat_cols.size()));
        std::vector<int> pos(lv.dim(0), -1);
        for (size_t k = 0; k < cat_cols.size(); ++k) pos[cat_cols[k]] = static_cast<int>(k);
        for (int i = 0; i < fl.outerSize(); ++i)
            for (SpMat::InnerIterator it(fl, i); it; ++it) m(it.row(), pos[it.col()]) += it.value();
        return m;
    };

    out.z.push_back(RowVec());
    bool done = false;
    while (!done) {
        Scan sc = scan_window(cfg, lv, tail, i0, s, std::max(1, i_f + 1), out.window_extensions);
        const int kc = sc.kappa;
        out.converged_level = kc;

        // LU of N_l = Q_ll + Q_{l,l+1} G_l for l = i_f+1..kc (levels >= 1).
        // Above M the blocks repeat and G_l is held at the converged G_kc,
        // so those levels share one factorization.
        const int lo = std::max(1, i_f + 1);
        std::vector<std::shared_ptr<Eigen::PartialPivLU<Mat>>> nlu(kc + 1);
        std::shared_ptr<Eigen::PartialPivLU<Mat>> shared;
        Mat g = std::move(sc.g);
        for (int l = kc; l >= lo; --l) {
            if (l > cfg.M && shared) {
                nlu[l] = shared;
            } else {
                Mat n = lv.diag(l);
                n.noalias() += lv.blocks(l).upper * g;
                nlu[l] = std::make_shared<Eigen::PartialPivLU<Mat>>(n);
                if (l > cfg.M) shared = nlu[l];
            }
            if (l > lo && l <= cfg.M + 1) {
                g = -nlu[l]->solve(Mat(lv.blocks(l).lower));
                if (!g.allFinite()) throw NumericalError("G recursion: singular level matrix");
            }
        }

        if (i_f < 0) {
            // boundary generator of level 0 with all excursions above it folded in
            Mat bc = first_dense(kc);
            for (int l = kc - 1; l >= 1; --l) {
                Mat next = first_dense(l);
                next.noalias() -= lv.blocks(l).upper * nlu[l + 1]->solve(bc);
                bc = std::move(next);
            }
            Mat b1 = Mat(lv.blocks(1).lower);
            for (size_t k = 0; k < cat_cols.size(); ++k) b1.col(cat_cols[k]) += bc.col(static_cast<Eigen::Index>(k));
            Mat bd = lv.diag(0);
            bd.noalias() -= lv.blocks(0).upper * nlu[1]->solve(b1);
            RowVec z0 = stationary_distribution(bd);
            if (!z0.allFinite()) throw NumericalError("boundary system is singular");
            out.z[0] = z0 / z0.sum();
        }

        for (int l = lo; l <= kc; ++l) {
            RowVec y = out.z[l - 1] * lv.blocks(l - 1).upper;
            Vec x = nlu[l]->transpose().solve(Vec(-y.transpose()));
            RowVec zl = x.transpose().cwiseMax(0.0);
            out.z.push_back(zl);
            if (zl.sum() < cfg.solver.eps_f) {
                done = true;
                break;
            }
        }
        if (!done) {
            i_f = kc;
            i0 = kc + 1;
            s *= 2;
            ++out.window_extensions;
        }
    }
    out.s = s;
    const double mass = out.total_mass();
    for (auto& v : out.z) v /= mass;
    out.tail_mass = out.z.back().sum();
    return out;
}

StationaryDistribution direct_truncated_solve(const ModelConfig& cfg, int l_max) {
    l_max = std::max(l_max, cfg.M);
    TruncatedGenerator tg = assemble_truncated(cfg, l_max);
    const int n = static_cast<int>(tg.q.rows());
    // x_0 = 1 and the balance equation of state 0 is dropped; a dense
    // normalization row would wreck the sparse factorization. Level 0 is
    // ordered last so the catastrophe column only fills the bottom rows.
    const int n0 = tg.level_offset[1];
    auto pos = [&](int i) { return i < n0 ? n - n0 + i - 1 : i - n0; };
    Vec x = Vec::Zero(n);
    x(0) = 1.0;
    if (n > 1) {
        std::vector<Triplet> t;
        t.reserve(tg.q.nonZeros());
        Vec rhs = Vec::Zero(n - 1);
        for (int i = 0; i < tg.q.outerSize(); ++i)
            for (SpMat::InnerIterator it(tg.q, i); it; ++it) {
                const int c = static_cast<int>(it.col());
                if (c == 0) continue;
                if (it.row() == 0)
                    rhs(pos(c)) -= it.value();
                else
                    t.emplace_back(pos(c), pos(static_cast<int>(it.row())), it.value());
            }
        Eigen::SparseMatrix<double> a(n - 1, n - 1);
        a.setFromTriplets(t.begin(), t.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::NaturalOrdering<int>> lu;
        lu.compute(a);
        if (lu.info() != Eigen::Success) throw NumericalError("direct solve: factorization failed");
        Vec y = lu.solve(rhs);
        if (lu.info() != Eigen::Success || !y.allFinite()) throw NumericalError("direct solve: solve failed");
        for (int i = 1; i < n; ++i) x(i) = y(pos(i));
    }
    x /= x.sum();
    StationaryDistribution d;
    for (int l = 0; l <= l_max; ++l)
        d.z.push_back(x.segment(tg.level_offset[l], tg.level_offset[l + 1] - tg.level_offset[l]).transpose());
    d.converged_level = l_max;
    d.tail_mass = d.z.back().sum();
    return d;
}

}  // namespace catq
