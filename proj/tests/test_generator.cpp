#include <doctest.h>

#include <random>
#include <sstream>

#include "catq/csfp.hpp"
#include "catq/generator.hpp"
#include "catq/layout.hpp"
#include "catq/solver.hpp"
#include "support.hpp"

using namespace catq;
using catq::test::ExpParams;

namespace {

double max_row_sum(const SpMat& q) {
    double worst = 0.0;
    for (int i = 0; i < q.outerSize(); ++i) {
        double s = 0.0;
        for (SpMat::InnerIterator it(q, i); it; ++it) s += it.value();
        worst = std::max(worst, std::abs(s));
    }
    return worst;
}

double min_offdiag(const SpMat& q) {
    double m = 0.0;
    for (int i = 0; i < q.outerSize(); ++i)
        for (SpMat::InnerIterator it(q, i); it; ++it)
            if (it.row() != it.col()) m = std::min(m, it.value());
    return m;
}

// Rows of every stratum at a level: start index and cell.
int cell_row(const LevelLayout& lay, int k1, int k2, int j, int i) {
    int c = lay.find(k1, k2, j, i);
    REQUIRE(c >= 0);
    return lay.cells[c].offset;
}

}  // namespace

TEST_CASE("layout") {
    ExpParams p;
    p.S = 1;
    p.K = 1;
    ModelConfig c = test::exp_config(p);
    LevelLayout l1 = level_layout(c, 1);
    REQUIRE(l1.cells.size() == 3);
    CHECK(l1.cells[0].s.k1 == 0);
    CHECK(l1.cells[0].s.k2 == 0);
    CHECK(l1.cells[1].s.k1 == 0);
    CHECK(l1.cells[1].s.k2 == 1);
    CHECK(l1.cells[2].s.k1 == 1);
    CHECK(l1.cells[2].s.k2 == 0);
    for (const Cell& cell : l1.cells) {
        CHECK(cell.s.kind == StratumKind::Normal);
        CHECK(cell.dims[kPhO] == csfp_count(1, 1));
    }

    ModelConfig q = test::ph_config(2, 1, 1, 1, 3, 2);
    for (int l = 0; l <= 5; ++l) {
        LevelLayout lay = level_layout(q, l);
        int prev = -1;
        for (const Cell& cell : lay.cells) {
            CHECK(cell.offset > prev);
            prev = cell.offset;
        }
        if (l >= 1) {
            long want = 0;
            for (int k1 = 0; k1 <= 2; ++k1)
                for (int k2 = 0; k1 + k2 <= 2; ++k2)
                    want += 2L * 2 * csfp_count(k1, 2) * csfp_count(k2, 2) * csfp_count(std::min(l, 3), 2);
            CHECK(lay.dim == want);
        }
    }

    ExpParams f;
    f.S = 3;
    f.K = 3;
    f.K1 = 1;
    LevelLayout l0 = level_layout(test::exp_config(f), 0);
    for (int j = 1; j <= 3; ++j) CHECK(l0.find(0, 0, j, 0) >= 0);
    CHECK(l0.find(1, 1, 3, 1) >= 0);
    CHECK(l0.find(2, 1, 3, 1) < 0);
    CHECK(l0.find(1, 0, 2, 0) < 0);
}

TEST_CASE("upper block") {
    ExpParams p;
    p.S = 1;
    p.K2 = 0;
    ModelConfig c = test::exp_config(p);
    for (int l = 0; l <= 3; ++l) {
        Mat u = Mat(assemble_upper(c, l));
        LevelLayout lay = level_layout(c, l);
        for (const Cell& cell : lay.cells)
            for (int r = cell.offset; r < cell.offset + cell.dim; ++r) {
                if (cell.s.kind != StratumKind::Normal || cell.s.k1 + cell.s.k2 < c.S)
                    CHECK(u.row(r).cwiseAbs().sum() == 0.0);
                else
                    CHECK(u.row(r).sum() == doctest::Approx(p.ln));
            }
    }

    ExpParams z = p;
    z.ln = 0.0;
    z.lnc = 0.0;
    z.S = 2;
    ModelConfig cz = test::exp_config(z);
    for (int l = 0; l <= 3; ++l) CHECK(assemble_upper(cz, l).nonZeros() == 0);

    // handoff preemption adds lambda_H at full strata holding a new call
    ExpParams k = p;
    k.K2 = 1;
    ModelConfig ck = test::exp_config(k);
    LevelLayout lay = level_layout(ck, 1);
    Mat u = Mat(assemble_upper(ck, 1));
    CHECK(u.row(cell_row(lay, 0, 1, 0, 0)).sum() == doctest::Approx(k.ln + k.lh));
    CHECK(u.row(cell_row(lay, 1, 0, 0, 0)).sum() == doctest::Approx(k.ln));
}

TEST_CASE("lower block") {
    ExpParams p;
    p.S = 2;
    p.p_ab = 0.0;
    p.theta = 1.7;
    ModelConfig c = test::exp_config(p);
    LevelLayout lay = level_layout(c, 1);
    LevelLayout down = level_layout(c, 0);
    Mat low = Mat(assemble_lower(c, 1));
    for (const Cell& cell : lay.cells) {
        const int r = cell.offset;
        if (cell.s.k1 + cell.s.k2 == c.S) {
            CHECK(low.row(r).cwiseAbs().sum() == 0.0);
        } else {
            int to = cell_row(down, cell.s.k1, cell.s.k2 + 1, 0, 0);
            CHECK(low(r, to) == doctest::Approx(p.theta));
            CHECK(low.row(r).sum() == doctest::Approx(p.theta));
        }
    }

    ExpParams a = p;
    a.p_ab = 0.4;
    ModelConfig ca = test::exp_config(a);
    Mat la = Mat(assemble_lower(ca, 1));
    int full = cell_row(lay, 1, 1, 0, 0);
    CHECK(la(full, cell_row(down, 1, 1, 0, 0)) == doctest::Approx(0.4 * p.theta));
}

TEST_CASE("level zero matches the hand-built chain") {
    for (int variant = 0; variant < 2; ++variant) {
        ExpParams p;
        p.S = 1;
        p.K = 1;
        p.K1 = variant;
        p.K2 = variant;
        ModelConfig c = test::exp_config(p);
        LevelLayout lay = level_layout(c, 0);
        REQUIRE(lay.dim == 7);
        const int idle = cell_row(lay, 0, 0, 0, 0), h = cell_row(lay, 1, 0, 0, 0), n = cell_row(lay, 0, 1, 0, 0);
        const int b0 = cell_row(lay, 0, 0, 1, 0), bh = cell_row(lay, 1, 0, 1, 0), bn = cell_row(lay, 0, 1, 1, 0),
                  be = cell_row(lay, 0, 0, 1, 1);

        Mat q = Mat::Zero(7, 7);
        Vec up = Vec::Zero(7);
        q(idle, h) = p.lh;
        q(idle, n) = p.ln;
        q(h, idle) = p.mh;
        q(h, b0) = p.cat;
        up(h) = p.ln;
        q(n, idle) = p.mn;
        q(n, b0) = p.cat;
        up(n) = p.ln + (p.K2 > 0 ? p.lh : 0.0);
        q(b0, bh) = p.lhc;
        q(b0, bn) = p.lnc;
        q(b0, be) = p.le;
        for (int s : {b0, bh, bn, be}) q(s, idle) = p.rep;
        q(bh, b0) = p.mh;
        q(bn, b0) = p.mn;
        q(be, b0) = p.me;
        if (p.K1 > 0) {
            q(bh, be) = p.le;
            q(bn, be) = p.le;
        }
        for (int r = 0; r < 7; ++r) q(r, r) = -(q.row(r).sum() + up(r));

        Mat d = Mat(assemble_diag(c, 0));
        CHECK((d - q).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((Mat(assemble_upper(c, 0)).rowwise().sum() - up).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(assemble_first_col(c, 0).nonZeros() == 0);
    }
}

TEST_CASE("idle system without arrivals") {
    ExpParams p;
    p.S = 2;
    p.K = 1;
    p.lh = p.ln = p.lhc = p.lnc = p.le = 0.0;
    p.cat = 0.0;
    ModelConfig c = test::exp_config(p);
    SpMat d = assemble_diag(c, 0);
    CHECK(max_row_sum(d) < 1e-14);
    LevelLayout lay = level_layout(c, 0);
    int idle = cell_row(lay, 0, 0, 0, 0);
    CHECK(Mat(d).row(idle).cwiseAbs().sum() == 0.0);
}

TEST_CASE("catastrophe column") {
    ExpParams p;
    p.S = 1;
    ModelConfig c = test::exp_config(p);
    for (int l = 1; l <= 3; ++l) {
        Mat w = Mat(assemble_first_col(c, l));
        LevelLayout lay = level_layout(c, l);
        LevelLayout l0 = level_layout(c, 0);
        CHECK(w.row(cell_row(lay, 0, 0, 0, 0)).cwiseAbs().sum() == 0.0);
        for (auto [k1, k2] : {std::pair{1, 0}, std::pair{0, 1}}) {
            int r = cell_row(lay, k1, k2, 0, 0);
            CHECK(w.row(r).sum() == doctest::Approx(p.cat));
            CHECK(w(r, cell_row(l0, 0, 0, 1, 0)) == doctest::Approx(p.cat));
        }
    }

    ModelConfig q = test::ph_config(3, 2, 1, 2, 2, 2);
    LevelLayout lay = level_layout(q, 2);
    LevelLayout l0 = level_layout(q, 0);
    Mat w = Mat(assemble_first_col(q, 2));
    for (const Cell& cell : lay.cells) {
        const int busy = cell.s.k1 + cell.s.k2;
        for (int r = cell.offset; r < cell.offset + cell.dim; ++r)
            for (int col = 0; col < w.cols(); ++col) {
                if (w(r, col) == 0.0) continue;
                int target = -1;
                for (size_t k = 0; k < l0.cells.size(); ++k)
                    if (col >= l0.cells[k].offset && col < l0.cells[k].offset + l0.cells[k].dim)
                        target = static_cast<int>(k);
                REQUIRE(target >= 0);
                const Stratum& t = l0.cells[target].s;
                CHECK(t.j == busy);
                CHECK(t.k1 == 0);
                CHECK(t.k2 == 0);
                CHECK(t.i == 0);
            }
        if (busy == 0) CHECK(w.block(cell.offset, 0, cell.dim, w.cols()).cwiseAbs().sum() == 0.0);
    }
}

TEST_CASE("conservation and sign pattern") {
    std::vector<ModelConfig> cfgs;
    for (int S = 1; S <= 3; ++S)
        for (int K = 1; K <= 2; ++K) {
            if (K > S) continue;
            ExpParams p;
            p.S = S;
            p.K = K;
            p.K1 = 1;
            p.K2 = std::min(S, 2);
            cfgs.push_back(test::exp_config(p));
            cfgs.push_back(test::ph_config(S, K, K - 1, S - 1, 2, 2));
        }
    for (const ModelConfig& c : cfgs) {
        TruncatedGenerator g = assemble_truncated(c, c.M + 6);
        CHECK(max_row_sum(g.q) < 1e-10);
        CHECK(min_offdiag(g.q) >= 0.0);
        for (int l = 0; l <= c.M + 3; ++l) CHECK(assemble_level(c, l).delta_discrepancy < 1e-10);
    }
}

TEST_CASE("tail blocks repeat above M") {
    ModelConfig c = test::ph_config(2, 1, 1, 1, 2, 2);
    LevelBlocks a = assemble_level(c, c.M + 1), b = assemble_level(c, c.M + 2);
    CHECK(max_abs_diff(a.diag, b.diag) == 0.0);
    CHECK(max_abs_diff(a.upper, b.upper) == 0.0);
    CHECK(max_abs_diff(a.lower, b.lower) == 0.0);
    CHECK(max_abs_diff(a.first_col, b.first_col) == 0.0);
}

TEST_CASE("assembly matches the enumeration oracle") {
    ExpParams p;
    p.S = 1;
    p.K = 1;
    p.K1 = 1;
    p.K2 = 1;
    ModelConfig e = test::exp_config(p);
    CHECK(max_abs_diff(assemble_truncated(e, 6).q, enumerate_transitions_oracle(e, 6).q) < 1e-12);

    for (int M : {1, 2, 3}) {
        ModelConfig q = test::ph_config(2, 2, 1, 1, M, 1);
        CHECK(max_abs_diff(assemble_truncated(q, M + 3).q, enumerate_transitions_oracle(q, M + 3).q) < 1e-12);
        ModelConfig r = test::ph_config(2, 1, 1, 2, M, 2);
        CHECK(max_abs_diff(assemble_truncated(r, M + 3).q, enumerate_transitions_oracle(r, M + 3).q) < 1e-12);
    }

    ModelConfig lr = test::ph_config(3, 2, 2, 1, 2, 2);
    lr.retrial.level_rates = {1.0, 0.6, 1.4};
    CHECK(max_abs_diff(assemble_truncated(lr, 5).q, enumerate_transitions_oracle(lr, 5).q) < 1e-12);
}

TEST_CASE("kronecker sum row identity") {
    std::mt19937_64 g(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 10; ++t) {
        Mat a = Mat::NullaryExpr(3, 3, [&]() { return u(g); });
        Mat b = Mat::NullaryExpr(2, 2, [&]() { return u(g); });
        SpMat s = kron(to_sparse(a), sparse_identity(2));
        s += kron(sparse_identity(3), to_sparse(b));
        Vec lhs = Mat(s).rowwise().sum();
        Vec ra = a.rowwise().sum(), rb = b.rowwise().sum();
        Vec rhs(6);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 2; ++j) rhs(2 * i + j) = ra(i) + rb(j);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("truncation of the reference cell at S=2") {
    ModelConfig c = load_config(test::source_path("configs/baseline.json"));
    c.S = 2;
    c.K = 1;
    c.K1 = 1;
    c.K2 = 1;
    TruncatedGenerator g = assemble_truncated(c, 50);
    CHECK(max_row_sum(g.q) < 1e-10);
    CHECK(min_offdiag(g.q) >= 0.0);

    auto gap = [&](int lo, int hi, double& tail) {
        StationaryDistribution a = direct_truncated_solve(c, lo), b = direct_truncated_solve(c, hi);
        for (const auto& v : a.z) CHECK(v.minCoeff() >= 0.0);
        tail = a.z.back().sum();
        double l1 = 0.0;
        for (int l = 0; l < b.levels(); ++l)
            l1 += l < a.levels() ? (a.z[l] - b.z[l]).cwiseAbs().sum() : b.z[l].cwiseAbs().sum();
        return l1;
    };
    double t40 = 0.0, t60 = 0.0;
    double g40 = gap(40, 60, t40), g60 = gap(60, 80, t60);
    // the error sits in the folded tail
    CHECK(g40 < 5.0 * t40);
    CHECK(g60 < 5.0 * t60);
    CHECK(g60 < 0.1 * g40);
}

TEST_CASE("matrix market dump") {
    ExpParams p;
    ModelConfig c = test::exp_config(p);
    SpMat d = assemble_diag(c, 1);
    std::ostringstream os;
    write_matrix_market(os, d);
    std::string s = os.str();
    CHECK(s.rfind("%%MatrixMarket matrix coordinate real general", 0) == 0);
    CHECK(s.find(std::to_string(d.rows()) + " " + std::to_string(d.cols()) + " " + std::to_string(d.nonZeros())) !=
          std::string::npos);
}
