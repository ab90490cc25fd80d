#include <doctest.h>

#include <random>

#include "catq/csfp.hpp"
#include "catq/processes.hpp"
#include "oracles.hpp"

using namespace catq;
using namespace catq::test;

namespace {

long binomial(int a, int b) {
    long r = 1;
    for (int k = 1; k <= b; ++k) r = r * (a - b + k) / k;
    return r;
}

Mat random_subgen(int m, std::mt19937_64& g) {
    std::uniform_real_distribution<double> u(0.1, 1.0);
    Mat a(m, m);
    for (int i = 0; i < m; ++i) {
        double row = 0.0;
        for (int j = 0; j < m; ++j)
            if (i != j) row += a(i, j) = u(g);
        a(i, i) = -row - u(g);
    }
    return a;
}

RowVec random_dist(int m, std::mt19937_64& g) {
    std::uniform_real_distribution<double> u(0.1, 1.0);
    RowVec b(m);
    for (int j = 0; j < m; ++j) b(j) = u(g);
    return b / b.sum();
}

double diff(const SpMat& a, const Mat& b) { return max_diff(a, b); }

}  // namespace

TEST_CASE("basis size and order") {
    for (int n = 0; n <= 6; ++n)
        for (int m = 1; m <= 4; ++m) {
            CHECK(csfp_count(n, m) == binomial(m + n - 1, n));
            CHECK(csfp_basis(n, m).size() == csfp_count(n, m));
        }
    const CsfpBasis& b = csfp_basis(2, 2);
    REQUIRE(b.size() == 3);
    CHECK(b.states[0] == CountVector{2, 0});
    CHECK(b.states[1] == CountVector{1, 1});
    CHECK(b.states[2] == CountVector{0, 2});
    CHECK(b.index_of({1, 1}) == 1);
    CHECK(csfp_basis(3, 1).states == std::vector<CountVector>{{3}});
    CHECK(csfp_basis(3, 2).size() == 4);
    CHECK(csfp_basis(0, 3).index_of({0, 0, 0}) == 0);
    CHECK_THROWS(b.index_of({2, 1}));
    CHECK_THROWS(csfp_count(200, 60));
}

TEST_CASE("index round trip") {
    for (int n = 0; n <= 5; ++n)
        for (int m = 1; m <= 4; ++m) {
            const CsfpBasis& b = csfp_basis(n, m);
            for (int i = 0; i < b.size(); ++i) CHECK(b.index_of(b.states[i]) == i);
        }
}

TEST_CASE("service start matrix") {
    RowVec beta(2);
    beta << 0.05, 0.95;
    Mat p0 = Mat(build_P(0, beta));
    REQUIRE(p0.rows() == 1);
    REQUIRE(p0.cols() == 2);
    CHECK(p0(0, 0) == 0.05);
    CHECK(p0(0, 1) == 0.95);

    Mat p1 = Mat(build_P(1, beta));
    const CsfpBasis& b2 = csfp_basis(2, 2);
    CHECK(p1(0, b2.index_of({2, 0})) == 0.05);
    CHECK(p1(0, b2.index_of({1, 1})) == 0.95);
    CHECK(p1(0, b2.index_of({0, 2})) == 0.0);

    for (int n = 0; n < 4; ++n) {
        Mat p = Mat(build_P(n, RowVec::Ones(1)));
        CHECK(p.rows() == 1);
        CHECK(p.cols() == 1);
        CHECK(p(0, 0) == 1.0);
        Vec rows = Mat(build_P(n, beta)).rowwise().sum();
        CHECK((rows.array() - 1.0).abs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("phase motion and completion") {
    Mat a(2, 2);
    a << -1.5, 0.5, 0.2, -0.9;
    CHECK(diff(build_A(1, a), a) == 0.0);
    CHECK(Mat(build_A(2, Mat::Constant(1, 1, -0.7)))(0, 0) == doctest::Approx(-1.4));

    Vec exit = -a.rowwise().sum();
    CHECK(diff(build_L(1, exit), Mat(exit)) == 0.0);
    for (int n = 1; n <= 4; ++n) CHECK(Mat(build_L(n, Vec::Constant(1, 0.3)))(0, 0) == doctest::Approx(0.3 * n));

    std::mt19937_64 g(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 1 + trial % 4;
        Mat s = random_subgen(m, g);
        Vec e = -s.rowwise().sum();
        for (int n = 1; n <= 4; ++n) {
            Vec r = Mat(build_A(n, s)).rowwise().sum() + Mat(build_L(n, e)).rowwise().sum();
            CHECK(r.cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("lumping of the track-phase construction") {
    std::mt19937_64 g(17);
    for (int m : {2, 3}) {
        Mat a = random_subgen(m, g);
        Vec e = -a.rowwise().sum();
        RowVec beta = random_dist(m, g);
        for (int n : {2, 3}) {
            if (m == 3 && n == 3) continue;
            CHECK(diff(build_A(n, a), lumped_motion(n, a)) < 1e-12);
            CHECK(diff(build_L(n, e), lumped_completion(n, e)) < 1e-12);

            Mat start = lump(n, n + 1, m, [&](const Tuple& t, const Tuple& u) {
                Tuple v = u;
                int last = v.back();
                v.pop_back();
                return v == t ? beta(last) : 0.0;
            });
            CHECK(diff(build_P(n, beta), start) < 1e-12);

            Mat removal = lump(n, n - 1, m, [&](const Tuple& t, const Tuple& u) {
                double r = 0.0;
                for (size_t k = 0; k < t.size(); ++k)
                    if (erase(t, k) == u) r += 1.0 / static_cast<double>(n);
                return r;
            });
            CHECK(diff(build_removal(n, m), removal) < 1e-12);

            // all n start independently from beta
            Mat all = lump(0, n, m, [&](const Tuple&, const Tuple& u) {
                double p = 1.0;
                for (int x : u) p *= beta(x);
                return p;
            });
            CHECK(diff(build_start_all(n, beta), all) < 1e-12);
        }
    }
}

TEST_CASE("retrial blocks") {
    RowVec gamma(2);
    gamma << 1.0, 0.0;
    Mat gam(2, 2);
    gam << -2.0, 2.0, 0.0, -2.0;
    RetrialProcess r = make_retrial(gamma, gam, 1.0, 0.3);

    RetrialBlocks b0 = build_retrial_blocks(0, r);
    CHECK(b0.abandon.rows() == 0);
    CHECK(b0.retry.rows() == 0);
    CHECK(diff(b0.join, Mat(gamma)) == 0.0);

    RetrialBlocks b1 = build_retrial_blocks(1, r);
    CHECK(diff(b1.motion, r.subgen) == 0.0);
    CHECK(diff(b1.retry, Mat(r.exit_retry)) == 0.0);
    CHECK(diff(b1.abandon, Mat(r.exit_abandon)) == 0.0);
    CHECK(diff(b1.restart, Mat(gamma)) == 0.0);

    for (int l = 1; l <= 4; ++l) {
        RetrialBlocks b = build_retrial_blocks(l, r);
        Vec s = Mat(b.motion).rowwise().sum() + Mat(b.abandon).rowwise().sum() + Mat(b.retry).rowwise().sum();
        CHECK(s.cwiseAbs().maxCoeff() < 1e-12);
    }
}
