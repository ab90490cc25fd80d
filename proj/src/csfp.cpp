#include "catq/csfp.hpp"

#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace catq {

namespace {

void enumerate(int left, int pos, CountVector& cur, std::vector<CountVector>& out) {
    const int m = static_cast<int>(cur.size());
    if (pos == m - 1) {
        cur[pos] = left;
        out.push_back(cur);
        return;
    }
    for (int k = left; k >= 0; --k) {
        cur[pos] = k;
        enumerate(left - k, pos + 1, cur, out);
    }
}

}  // namespace

int CsfpBasis::index_of(const CountVector& s) const {
    auto it = index.find(s);
    if (it == index.end()) throw std::out_of_range("CsfpBasis::index_of: vector not in basis");
    return it->second;
}

long csfp_count(int n, int m) {
    if (n < 0 || m < 1) throw std::invalid_argument("csfp_count: need n >= 0, m >= 1");
    // C(m+n-1, n) by the multiplicative formula; exact in integers
    long r = 1;
    for (int k = 1; k <= n; ++k) {
        if (r > std::numeric_limits<long>::max() / (m - 1 + k))
            throw std::overflow_error("csfp_count: T_n^m exceeds the integer range");
        r = r * (m - 1 + k) / k;
    }
    return r;
}

const CsfpBasis& csfp_basis(int n, int m) {
    if (n < 0 || m < 1) throw std::invalid_argument("csfp_basis: need n >= 0, m >= 1");
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::unique_ptr<CsfpBasis>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{n, m}];
    if (!slot) {
        auto b = std::make_unique<CsfpBasis>();
        b->n = n;
        b->m = m;
        CountVector cur(m, 0);
        enumerate(n, 0, cur, b->states);
        for (int i = 0; i < b->size(); ++i) b->index[b->states[i]] = i;
        slot = std::move(b);
    }
    return *slot;
}

SpMat build_P(int n, const RowVec& beta) {
    const int m = static_cast<int>(beta.size());
    const CsfpBasis& src = csfp_basis(n, m);
    const CsfpBasis& dst = csfp_basis(n + 1, m);
    std::vector<Triplet> t;
    for (int r = 0; r < src.size(); ++r) {
        CountVector s = src.states[r];
        for (int j = 0; j < m; ++j) {
            if (beta(j) == 0.0) continue;
            ++s[j];
            t.emplace_back(r, dst.index_of(s), beta(j));
            --s[j];
        }
    }
    return from_triplets(src.size(), dst.size(), t);
}

SpMat build_A(int n, const Mat& a) {
    const int m = static_cast<int>(a.rows());
    const CsfpBasis& b = csfp_basis(n, m);
    std::vector<Triplet> t;
    for (int r = 0; r < b.size(); ++r) {
        CountVector s = b.states[r];
        double diag = 0.0;
        for (int j = 0; j < m; ++j) {
            if (s[j] == 0) continue;
            diag += s[j] * a(j, j);
            for (int k = 0; k < m; ++k) {
                if (k == j || a(j, k) == 0.0) continue;
                double rate = s[j] * a(j, k);
                --s[j];
                ++s[k];
                t.emplace_back(r, b.index_of(s), rate);
                ++s[j];
                --s[k];
            }
        }
        if (diag != 0.0) t.emplace_back(r, r, diag);
    }
    return from_triplets(b.size(), b.size(), t);
}

SpMat build_L(int n, const Vec& exit) {
    if (n < 1) throw std::invalid_argument("build_L: need n >= 1");
    const int m = static_cast<int>(exit.size());
    const CsfpBasis& src = csfp_basis(n, m);
    const CsfpBasis& dst = csfp_basis(n - 1, m);
    std::vector<Triplet> t;
    for (int r = 0; r < src.size(); ++r) {
        CountVector s = src.states[r];
        for (int j = 0; j < m; ++j) {
            if (s[j] == 0 || exit(j) == 0.0) continue;
            double rate = s[j] * exit(j);
            --s[j];
            t.emplace_back(r, dst.index_of(s), rate);
            ++s[j];
        }
    }
    return from_triplets(src.size(), dst.size(), t);
}

SpMat build_removal(int n, int m) {
    if (n < 1) throw std::invalid_argument("build_removal: need n >= 1");
    return build_L(n, Vec::Ones(m)) / static_cast<double>(n);
}

SpMat build_start_all(int n, const RowVec& beta) {
    SpMat acc = sparse_identity(1);
    for (int k = 0; k < n; ++k) acc = SpMat(acc * build_P(k, beta));
    return acc;
}

RetrialBlocks build_retrial_blocks(int n, const RetrialProcess& r) {
    RetrialBlocks b;
    b.motion = build_A(n, r.subgen);
    b.join = build_P(n, r.gamma);
    if (n >= 1) {
        b.abandon = build_L(n, r.exit_abandon);
        b.retry = build_L(n, r.exit_retry);
        b.restart = build_P(n - 1, r.gamma);
    }
    return b;
}

}  // namespace catq
