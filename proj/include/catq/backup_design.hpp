#pragma once

#include "catq/config.hpp"
#include "catq/nsga2.hpp"

#include <string>
#include <vector>

namespace catq {

struct BackupCandidate {
    int K = 0;
    int K1 = 0;
    double lambda_e = 0.0;
    double mu_e = 0.0;
    double p_e = 1.0;
    double p_b_c = 1.0;
    double p_preempt_emr = 1.0;
    bool stable = false;
    double violation = 0.0;
    bool feasible() const { return stable && violation <= 0.0; }
};

// Patches (K, K1, lambda_E, mu_E) into the catastrophic scenario and solves.
BackupCandidate evaluate_backup(const ModelConfig& cfg, int K, int K1, double lambda_e, double mu_e);

struct OptimizationResult {
    std::vector<BackupCandidate> pareto;  // sorted by (K, K1, lambda_E, mu_E)
    bool feasible = false;  // false: no candidate met the constraints, best-violation set returned
    int evaluations = 0;
    std::vector<std::string> log;
};

// Minimizes (K, K1) subject to P_e, P_b^c, P_preempt^emr <= eps. Requires cfg.nsga2.
OptimizationResult optimize_backup(const ModelConfig& cfg, int threads = 1);

std::string optimization_csv(const OptimizationResult& r);

}  // namespace catq
