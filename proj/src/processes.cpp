#include "catq/processes.hpp"

#include <cmath>
#include <sstream>

#include "catq/errors.hpp"

namespace catq {

namespace {

double row_tol(const Mat& m) { return 1e-10 * (1.0 + m.cwiseAbs().maxCoeff()); }

void add(ValidationReport& r, const std::string& path, const std::string& msg) {
    r.issues.push_back(path + ": " + msg);
}

bool check_square(ValidationReport& r, const Mat& m, const std::string& path) {
    if (m.rows() == 0 || m.rows() != m.cols()) {
        add(r, path, "must be a non-empty square matrix");
        return false;
    }
    if (!m.allFinite()) {
        add(r, path, "contains non-finite entries");
        return false;
    }
    return true;
}

void check_offdiag_nonneg(ValidationReport& r, const Mat& m, const std::string& path) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            if (i != j && m(i, j) < 0.0) {
                std::ostringstream os;
                os << "off-diagonal entry (" << i << "," << j << ") is negative";
                add(r, path, os.str());
            }
}

void check_nonneg(ValidationReport& r, const Mat& m, const std::string& path) {
    if (!m.allFinite()) {
        add(r, path, "contains non-finite entries");
        return;
    }
    if ((m.array() < 0.0).any()) add(r, path, "entries must be nonnegative");
}

void check_distribution(ValidationReport& r, const RowVec& v, int dim, const std::string& path) {
    if (v.size() != dim) {
        add(r, path, "length does not match the phase dimension");
        return;
    }
    if ((v.array() < 0.0).any()) add(r, path, "entries must be nonnegative");
    if (std::abs(v.sum() - 1.0) > 1e-10) add(r, path, "entries must sum to 1");
}

void check_absorbing(ValidationReport& r, const Mat& a, const std::string& path) {
    for (int i = 0; i < a.rows(); ++i)
        if (a(i, i) >= 0.0) {
            add(r, path, "diagonal entries must be negative");
            return;
        }
    if ((a.rowwise().sum().array() > row_tol(a)).any())
        add(r, path, "row sums must be nonpositive");
    Eigen::FullPivLU<Mat> lu(a);
    if (!lu.isInvertible()) add(r, path, "subgenerator is singular (absorption not certain)");
}

Mat aggregated(const MarkedArrivalProcess& m) {
    Mat d1 = Mat::Zero(m.dim(), m.dim());
    for (const auto& c : m.marks) d1 += c;
    return d1;
}

double corr_of(const Mat& d0, const Mat& d1) {
    const int n = static_cast<int>(d0.rows());
    RowVec pi = stationary_phase_vector(d0 + d1);
    double lam = (pi * d1).sum();
    if (lam <= 0.0) return 0.0;
    RowVec phi = pi * d1 / lam;
    Mat minv = (-d0).inverse();
    Vec e = Vec::Ones(n);
    double m1 = phi * minv * e;
    double m2 = 2.0 * (phi * minv * minv * e)(0);
    double var = m2 - m1 * m1;
    if (var <= 0.0) return 0.0;
    double e01 = (phi * minv * minv * d1 * minv * e)(0);
    return (e01 - m1 * m1) / var;
}

}  // namespace

void ValidationReport::merge(const ValidationReport& other) {
    issues.insert(issues.end(), other.issues.begin(), other.issues.end());
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (size_t i = 0; i < issues.size(); ++i) os << (i ? "\n" : "") << issues[i];
    return os.str();
}

PhaseType PhaseType::scaled(double factor) const { return {beta, subgen * factor}; }

PhaseType exponential_ph(double rate) {
    PhaseType p;
    p.beta = RowVec::Ones(1);
    p.subgen = Mat::Constant(1, 1, -rate);
    return p;
}

double RetrialProcess::theta() const { return ph_fundamental_rate(gamma, subgen); }

double RetrialProcess::level_factor(int l, int M) const {
    if (level_rates.empty() || l > M || l >= static_cast<int>(level_rates.size())) return 1.0;
    return level_rates[l] / theta();
}

RetrialProcess RetrialProcess::scaled(double factor) const {
    RetrialProcess r = *this;
    r.subgen *= factor;
    r.exit_abandon *= factor;
    r.exit_retry *= factor;
    for (auto& x : r.level_rates) x *= factor;
    return r;
}

RetrialProcess make_retrial(const RowVec& gamma, const Mat& subgen, double theta,
                            double p_abandon) {
    if (p_abandon < 0.0 || p_abandon > 1.0)
        throw ConfigError("retrial: abandon_fraction must lie in [0,1]");
    RetrialProcess r;
    r.gamma = gamma;
    double base = ph_fundamental_rate(gamma, subgen);
    if (!(base > 0.0) || !std::isfinite(base)) throw ConfigError("retrial: invalid subgenerator");
    r.subgen = subgen * (theta / base);
    Vec exit = -r.subgen.rowwise().sum();
    r.exit_abandon = p_abandon * exit;
    r.exit_retry = (1.0 - p_abandon) * exit;
    return r;
}

Mat MarkedArrivalProcess::generator() const { return c0 + aggregated(*this); }

Mat MarkedArrivalProcess::mark(int cls) const {
    if (cls < static_cast<int>(marks.size())) return marks[cls];
    return Mat::Zero(dim(), dim());
}

MarkedArrivalProcess MarkedArrivalProcess::with_class_scaled(int cls, double factor) const {
    MarkedArrivalProcess m = *this;
    Vec out = marks.at(cls).rowwise().sum();
    m.marks[cls] *= factor;
    for (int i = 0; i < dim(); ++i) m.c0(i, i) -= (factor - 1.0) * out(i);
    return m;
}

MarkedArrivalProcess CatastropheProcess::as_marked() const { return {d0, {d1}}; }

CatastropheProcess CatastropheProcess::scaled(double factor) const {
    CatastropheProcess c = *this;
    Vec out = d1.rowwise().sum();
    c.d1 *= factor;
    for (int i = 0; i < dim(); ++i) c.d0(i, i) -= (factor - 1.0) * out(i);
    return c;
}

ValidationReport validate(const PhaseType& p, const std::string& path) {
    ValidationReport r;
    if (!check_square(r, p.subgen, path + ".A")) return r;
    check_offdiag_nonneg(r, p.subgen, path + ".A");
    check_absorbing(r, p.subgen, path + ".A");
    check_distribution(r, p.beta, p.dim(), path + ".beta");
    return r;
}

ValidationReport validate(const RetrialProcess& q, const std::string& path) {
    ValidationReport r;
    if (!check_square(r, q.subgen, path + ".Gamma")) return r;
    check_offdiag_nonneg(r, q.subgen, path + ".Gamma");
    check_absorbing(r, q.subgen, path + ".Gamma");
    check_distribution(r, q.gamma, q.dim(), path + ".gamma");
    if (q.exit_abandon.size() != q.dim() || q.exit_retry.size() != q.dim()) {
        add(r, path, "exit vectors must match the phase dimension");
        return r;
    }
    if ((q.exit_abandon.array() < 0.0).any() || (q.exit_retry.array() < 0.0).any())
        add(r, path, "exit vectors must be nonnegative");
    Vec gap = q.exit_abandon + q.exit_retry + q.subgen.rowwise().sum();
    if (gap.cwiseAbs().maxCoeff() > row_tol(q.subgen))
        add(r, path, "exit_abandon + exit_retry must equal -Gamma*1");
    for (double x : q.level_rates)
        if (!(x > 0.0)) add(r, path + ".level_rates", "rates must be positive");
    return r;
}

ValidationReport validate(const MarkedArrivalProcess& m, const std::string& path) {
    ValidationReport r;
    if (!check_square(r, m.c0, path + ".C0")) return r;
    check_offdiag_nonneg(r, m.c0, path + ".C0");
    for (int i = 0; i < m.dim(); ++i)
        if (m.c0(i, i) > 0.0) add(r, path + ".C0", "diagonal entries must be nonpositive");
    for (size_t k = 0; k < m.marks.size(); ++k) {
        std::string p = path + ".marks[" + std::to_string(k) + "]";
        if (m.marks[k].rows() != m.dim() || m.marks[k].cols() != m.dim()) {
            add(r, p, "dimension differs from C0");
            return r;
        }
        check_nonneg(r, m.marks[k], p);
    }
    Mat g = m.generator();
    if (g.rowwise().sum().cwiseAbs().maxCoeff() > row_tol(g))
        add(r, path, "C0 + sum of class matrices must have zero row sums");
    if (!is_irreducible(g)) add(r, path, "phase generator is reducible");
    return r;
}

ValidationReport validate(const CatastropheProcess& c, const std::string& path) {
    ValidationReport r;
    if (!check_square(r, c.d0, path + ".D0")) return r;
    if (c.d1.rows() != c.dim() || c.d1.cols() != c.dim()) {
        add(r, path + ".D1", "dimension differs from D0");
        return r;
    }
    check_offdiag_nonneg(r, c.d0, path + ".D0");
    for (int i = 0; i < c.dim(); ++i)
        if (c.d0(i, i) > 0.0) add(r, path + ".D0", "diagonal entries must be nonpositive");
    check_nonneg(r, c.d1, path + ".D1");
    Mat g = c.d0 + c.d1;
    if (g.rowwise().sum().cwiseAbs().maxCoeff() > row_tol(g))
        add(r, path, "D0 + D1 must have zero row sums");
    if (!is_irreducible(g)) add(r, path, "phase generator is reducible");
    return r;
}

bool is_irreducible(const Mat& g) {
    const int n = static_cast<int>(g.rows());
    // forward and backward reachability from state 0
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<char> seen(n, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            int i = stack.back();
            stack.pop_back();
            for (int j = 0; j < n; ++j) {
                double v = pass == 0 ? g(i, j) : g(j, i);
                if (i != j && v > 0.0 && !seen[j]) {
                    seen[j] = 1;
                    stack.push_back(j);
                }
            }
        }
        for (char s : seen)
            if (!s) return false;
    }
    return true;
}

RowVec stationary_phase_vector(const Mat& generator) {
    if (!is_irreducible(generator)) throw ConfigError("stationary_phase_vector: reducible generator");
    return stationary_distribution(generator);
}

double class_arrival_rate(const MarkedArrivalProcess& m, int cls) {
    if (cls < 0 || cls >= static_cast<int>(m.marks.size()))
        throw ConfigError("class_arrival_rate: unknown class " + std::to_string(cls));
    RowVec pi = stationary_phase_vector(m.generator());
    return (pi * m.marks[cls]).sum();
}

double total_arrival_rate(const MarkedArrivalProcess& m) {
    RowVec pi = stationary_phase_vector(m.generator());
    return (pi * aggregated(m)).sum();
}

double catastrophe_rate(const CatastropheProcess& c) {
    RowVec pi = stationary_phase_vector(c.d0 + c.d1);
    return (pi * c.d1).sum();
}

double ph_fundamental_rate(const RowVec& beta, const Mat& subgen) {
    Vec e = Vec::Ones(subgen.rows());
    double mean = beta * (-subgen).partialPivLu().solve(e);
    return 1.0 / mean;
}

double ph_fundamental_rate(const PhaseType& p) { return ph_fundamental_rate(p.beta, p.subgen); }

double map_correlation_coefficient(const MarkedArrivalProcess& m) {
    return corr_of(m.c0, aggregated(m));
}

double map_correlation_coefficient(const CatastropheProcess& c) { return corr_of(c.d0, c.d1); }

double map_variation_coefficient(const MarkedArrivalProcess& m) {
    Mat d1 = aggregated(m);
    const int n = m.dim();
    RowVec pi = stationary_phase_vector(m.c0 + d1);
    double lam = (pi * d1).sum();
    if (lam <= 0.0) return 0.0;
    RowVec phi = pi * d1 / lam;
    Mat minv = (-m.c0).inverse();
    Vec e = Vec::Ones(n);
    double m1 = phi * minv * e;
    double m2 = 2.0 * (phi * minv * minv * e)(0);
    return std::sqrt(std::max(0.0, m2 - m1 * m1)) / m1;
}

}  // namespace catq
