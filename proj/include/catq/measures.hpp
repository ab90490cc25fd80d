#pragma once

#include "catq/config.hpp"
#include "catq/solver.hpp"

#include <string>
#include <utility>
#include <vector>

namespace catq {

// Event fluxes (events per unit time) under the stationary law.
struct Fluxes {
    double h_arrivals_normal = 0, h_dropped_normal = 0, h_preempting = 0;
    double n_arrivals_normal = 0, n_to_orbit = 0;
    double h_arrivals_backup = 0, h_lost_backup = 0;
    double n_arrivals_backup = 0, n_lost_backup = 0;
    double e_arrivals_backup = 0, e_lost_backup = 0, e_preempting = 0;
    double catastrophes_busy = 0;
    double retrial_success = 0;
};

// Loss probabilities are per arriving call of the scenario the call arrives in:
// normal-mode measures divide by normal-mode arrivals of that class, backup-mode
// measures by arrivals while the backup channels operate.
struct PerformanceReport {
    double e_orbit = 0, var_orbit = 0;
    double p_d_n = 0;           // handoff dropped, normal mode
    double p_preempt_new = 0;   // handoff preempts a new call, normal mode
    double p_e = 0;             // emergency call blocked, backup mode
    double p_b_c = 0;           // new call blocked, backup mode
    double p_d_c = 0;           // handoff dropped, backup mode
    double p_preempt_emr = 0;   // emergency call preempts, backup mode
    double alpha_f = 0;         // catastrophes hitting a busy cell, per unit time
    double theta_r_succ = 0;    // successful retrials per unit time
    double p_repair = 0;        // P(some channels under repair)
    double p_backup = 0;        // P(all channels down, backup operating)
    double lambda_h = 0, lambda_n = 0;                     // normal arrivals
    double lambda_h_c = 0, lambda_n_c = 0, lambda_e_c = 0;  // catastrophic arrivals
    double mass = 0;
    int levels = 0;
    Fluxes flux;
    std::vector<double> busy_h, busy_n, busy_e, orbit;
};

PerformanceReport compute_report(const ModelConfig& cfg, const StationaryDistribution& d);

// Named scalar measures in a fixed order (CSV columns, JSON keys).
std::vector<std::pair<std::string, double>> report_scalars(const PerformanceReport& r);
std::string report_to_json(const PerformanceReport& r, int indent = 2);

struct SweepPoint {
    double value = 0;
    bool stable = false;
    std::string error;
    PerformanceReport report;
};

// Solves the model at each value of `param`. Points run on `threads` workers;
// the result order follows `values`.
std::vector<SweepPoint> sweep(const ModelConfig& cfg, const std::string& param,
                              const std::vector<double>& values, int threads = 1);

// Worker count from CATQ_THREADS, default 1.
int thread_count_from_env();

}  // namespace catq
