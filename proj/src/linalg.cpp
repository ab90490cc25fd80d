#include "catq/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace catq {

SpMat sparse_identity(int n) {
    SpMat id(n, n);
    id.setIdentity();
    return id;
}

SpMat ones_column(int n) {
    std::vector<Triplet> t;
    t.reserve(n);
    for (int i = 0; i < n; ++i) t.emplace_back(i, 0, 1.0);
    return from_triplets(n, 1, t);
}

SpMat to_sparse(const Mat& m) {
    std::vector<Triplet> t;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            if (m(i, j) != 0.0) t.emplace_back(i, j, m(i, j));
    return from_triplets(static_cast<int>(m.rows()), static_cast<int>(m.cols()), t);
}

SpMat from_triplets(int rows, int cols, const std::vector<Triplet>& t) {
    SpMat s(rows, cols);
    s.setFromTriplets(t.begin(), t.end());
    s.makeCompressed();
    return s;
}

SpMat kron(const SpMat& a, const SpMat& b) {
    std::vector<Triplet> t;
    t.reserve(static_cast<size_t>(a.nonZeros() * b.nonZeros()));
    emit_kron({&a, &b}, 1.0, 0, 0, t);
    return from_triplets(static_cast<int>(a.rows() * b.rows()),
                         static_cast<int>(a.cols() * b.cols()), t);
}

namespace {

void emit_rec(const std::vector<const SpMat*>& f, size_t k, const std::vector<long>& rs,
              const std::vector<long>& cs, long r, long c, double v,
              std::vector<Triplet>& out) {
    if (k == f.size()) {
        out.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
        return;
    }
    const SpMat& m = *f[k];
    for (int i = 0; i < m.outerSize(); ++i)
        for (SpMat::InnerIterator it(m, i); it; ++it)
            emit_rec(f, k + 1, rs, cs, r + it.row() * rs[k], c + it.col() * cs[k],
                     v * it.value(), out);
}

}  // namespace

void emit_kron(const std::vector<const SpMat*>& factors, double scale, int row0, int col0,
               std::vector<Triplet>& out) {
    if (scale == 0.0) return;
    const size_t n = factors.size();
    std::vector<long> rs(n), cs(n);
    long r = 1, c = 1;
    for (size_t k = n; k-- > 0;) {
        rs[k] = r;
        cs[k] = c;
        r *= factors[k]->rows();
        c *= factors[k]->cols();
    }
    emit_rec(factors, 0, rs, cs, row0, col0, scale, out);
}

RowVec stationary_distribution(const Mat& q) {
    const Eigen::Index n = q.rows();
    if (n == 1) return RowVec::Ones(1);
    Mat a = q.transpose();
    a.row(n - 1).setOnes();
    Vec b = Vec::Zero(n);
    b(n - 1) = 1.0;
    Vec x = n > 64 ? Vec(a.partialPivLu().solve(b)) : Vec(a.fullPivLu().solve(b));
    if (!x.allFinite()) throw std::runtime_error("stationary_distribution: singular system");
    return x.transpose();
}

double max_abs(const SpMat& a) {
    double m = 0.0;
    for (int i = 0; i < a.outerSize(); ++i)
        for (SpMat::InnerIterator it(a, i); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
}

double max_abs_diff(const SpMat& a, const SpMat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("max_abs_diff: shape mismatch");
    SpMat d = a - b;
    return max_abs(d);
}

double max_abs_diff(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("max_abs_diff: shape mismatch");
    return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace catq
