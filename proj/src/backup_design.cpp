#include "catq/backup_design.hpp"

#include <algorithm>
#include <cstring>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "catq/errors.hpp"
#include "catq/measures.hpp"
#include "catq/solver.hpp"

namespace catq {

BackupCandidate evaluate_backup(const ModelConfig& cfg, int K, int K1, double lambda_e, double mu_e) {
    BackupCandidate c;
    c.K = K;
    c.K1 = K1;
    c.lambda_e = lambda_e;
    c.mu_e = mu_e;
    ModelConfig m = cfg;
    m.K = K;
    m.K1 = K1;
    apply_parameter(m, "arrivals_catastrophic.rate_E", lambda_e);
    apply_parameter(m, "service_e.rate", mu_e);
    ValidationReport vr = validate_config(m);
    if (!vr.ok()) throw ConfigError(vr.summary());
    try {
        PerformanceReport r = compute_report(m, solve_stationary(m));
        c.p_e = r.p_e;
        c.p_b_c = r.p_b_c;
        c.p_preempt_emr = r.p_preempt_emr;
        c.stable = true;
    } catch (const UnstableError&) {
        c.stable = false;
    }
    const Nsga2Settings n = cfg.nsga2.value_or(Nsga2Settings{});
    c.violation = c.stable ? std::max(0.0, c.p_e - n.eps_e) + std::max(0.0, c.p_b_c - n.eps_b) +
                                 std::max(0.0, c.p_preempt_emr - n.eps_p)
                           : std::numeric_limits<double>::infinity();
    return c;
}

OptimizationResult optimize_backup(const ModelConfig& cfg, int threads) {
    if (!cfg.nsga2) throw ConfigError("optimize: the config has no nsga2 section");
    const Nsga2Settings& s = *cfg.nsga2;

    std::mutex mu;
    std::map<std::tuple<int, int, double, double>, BackupCandidate> cache;
    Problem p;
    p.int_bounds = {{0, cfg.S}, {0, cfg.S}};
    p.real_bounds = {{s.lambda_e_min, s.lambda_e_max}, {s.mu_e_min, s.mu_e_max}};
    p.repair = [](Individual& x) { x.ints[1] = std::clamp(x.ints[1], 0, x.ints[0]); };
    p.evaluate = [&](Individual& x) {
        auto key = std::make_tuple(x.ints[0], x.ints[1], x.reals[0], x.reals[1]);
        BackupCandidate c;
        bool hit = false;
        {
            std::lock_guard<std::mutex> lock(mu);
            auto it = cache.find(key);
            if (it != cache.end()) {
                c = it->second;
                hit = true;
            }
        }
        if (!hit) {
            try {
                c = evaluate_backup(cfg, x.ints[0], x.ints[1], x.reals[0], x.reals[1]);
            } catch (const NumericalError&) {
                c = BackupCandidate{x.ints[0], x.ints[1], x.reals[0], x.reals[1]};
                c.violation = std::numeric_limits<double>::infinity();
            }
            std::lock_guard<std::mutex> lock(mu);
            cache.emplace(key, c);
        }
        x.objectives = {static_cast<double>(c.K), static_cast<double>(c.K1)};
        x.violation = c.violation;
        x.extras = {c.p_e, c.p_b_c, c.p_preempt_emr, c.stable ? 1.0 : 0.0};
    };

    Nsga2Result nr = run_nsga2(p, s, threads);
    OptimizationResult out;
    out.feasible = nr.feasible;
    out.evaluations = nr.evaluations;
    out.log = nr.log;
    for (const Individual& x : nr.front) {
        BackupCandidate c;
        c.K = x.ints[0];
        c.K1 = x.ints[1];
        c.lambda_e = x.reals[0];
        c.mu_e = x.reals[1];
        c.p_e = x.extras[0];
        c.p_b_c = x.extras[1];
        c.p_preempt_emr = x.extras[2];
        c.stable = x.extras[3] > 0.5;
        c.violation = x.violation;
        out.pareto.push_back(c);
    }
    std::sort(out.pareto.begin(), out.pareto.end(), [](const BackupCandidate& a, const BackupCandidate& b) {
        return std::tie(a.K, a.K1, a.lambda_e, a.mu_e) < std::tie(b.K, b.K1, b.lambda_e, b.mu_e);
    });
    return out;
}

std::string optimization_csv(const OptimizationResult& r) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "K*,K1*,lambda_E*,mu_E*,P_e,P_b_c,P_preempt_emr,feasible\n";
    for (const auto& c : r.pareto)
        os << c.K << ',' << c.K1 << ',' << c.lambda_e << ',' << c.mu_e << ',' << c.p_e << ',' << c.p_b_c << ','
           << c.p_preempt_emr << ',' << (c.feasible() ? 1 : 0) << '\n';
    return os.str();
}

}  // namespace catq
