#include "catq/measures.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "catq/csfp.hpp"
#include "catq/errors.hpp"
#include "catq/layout.hpp"

namespace catq {

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

// Total completion rate of each CSFP state: sum_j s_j exit_j.
Vec completion_rates(int n, const Vec& exit) {
    const CsfpBasis& b = csfp_basis(n, static_cast<int>(exit.size()));
    Vec r = Vec::Zero(b.size());
    for (int k = 0; k < b.size(); ++k)
        for (size_t j = 0; j < b.states[k].size(); ++j) r(k) += b.states[k][j] * exit(j);
    return r;
}

}  // namespace

PerformanceReport compute_report(const ModelConfig& cfg, const StationaryDistribution& d) {
    PerformanceReport r;
    Fluxes& f = r.flux;
    const auto& an = cfg.arrivals_normal;
    const auto& ac = cfg.arrivals_catastrophic;
    const Vec hn = an.mark(kHandoff).rowwise().sum(), nn = an.mark(kNew).rowwise().sum();
    const Vec hc = ac.mark(kHandoff).rowwise().sum(), nc = ac.mark(kNew).rowwise().sum();
    const Vec ec = ac.mark(kEmergency).rowwise().sum();
    const Vec d1 = cfg.catastrophe.d1.rowwise().sum();
    const int L2 = cfg.catastrophe.dim();
    r.busy_h.assign(cfg.S + 1, 0.0);
    r.busy_n.assign(cfg.S + 1, 0.0);
    r.busy_e.assign(cfg.K + 1, 0.0);
    r.levels = d.levels();

    double m1 = 0.0, m2 = 0.0;
    for (int l = 0; l < d.levels(); ++l) {
        LevelLayout lay = level_layout(cfg, l);
        const RowVec& z = d.z[l];
        const int o = active_orbit(l, cfg.M);
        const double rho = cfg.retrial.level_factor(l, cfg.M);
        const Vec rt = completion_rates(o, cfg.retrial.exit_retry);
        const double lm = z.sum();
        r.orbit.push_back(lm);
        r.mass += lm;
        m1 += l * lm;
        m2 += static_cast<double>(l) * l * lm;
        for (const Cell& c : lay.cells) {
            const Stratum& s = c.s;
            const int inner = c.dim / c.dims[kV1];
            const int inner2 = inner / L2;
            const int od = c.dims[kPhO];
            for (int idx = 0; idx < c.dim; ++idx) {
                const double p = z(c.offset + idx);
                if (p == 0.0) continue;
                const int v1 = idx / inner, v2 = (idx / inner2) % L2;
                if (s.kind == StratumKind::Normal) {
                    const int busy = s.k1 + s.k2;
                    const bool full = busy == cfg.S;
                    r.busy_h[s.k1] += p;
                    r.busy_n[s.k2] += p;
                    r.busy_e[0] += p;
                    f.h_arrivals_normal += p * hn(v1);
                    f.n_arrivals_normal += p * nn(v1);
                    if (full) {
                        if (s.k1 < cfg.K2 && s.k2 >= 1) f.h_preempting += p * hn(v1);
                        else f.h_dropped_normal += p * hn(v1);
                        f.n_to_orbit += p * nn(v1);
                    } else if (o >= 1) {
                        f.retrial_success += p * rho * rt(idx % od);
                    }
                    if (busy >= 1) f.catastrophes_busy += p * d1(v2);
                } else if (s.kind == StratumKind::RepairOnly) {
                    r.busy_h[0] += p;
                    r.busy_n[0] += p;
                    r.busy_e[0] += p;
                    r.p_repair += p;
                } else {
                    const bool full = s.k1 + s.k2 + s.i == cfg.K;
                    r.busy_h[s.k1] += p;
                    r.busy_n[s.k2] += p;
                    r.busy_e[s.i] += p;
                    r.p_repair += p;
                    r.p_backup += p;
                    f.h_arrivals_backup += p * hc(v1);
                    f.n_arrivals_backup += p * nc(v1);
                    f.e_arrivals_backup += p * ec(v1);
                    if (full) {
                        f.h_lost_backup += p * hc(v1);
                        f.n_lost_backup += p * nc(v1);
                        if (s.i < cfg.K1 && s.k1 + s.k2 >= 1) f.e_preempting += p * ec(v1);
                        else f.e_lost_backup += p * ec(v1);
                    }
                }
            }
        }
    }
    r.e_orbit = m1;
    r.var_orbit = m2 - m1 * m1;
    r.p_d_n = ratio(f.h_dropped_normal, f.h_arrivals_normal);
    r.p_preempt_new = ratio(f.h_preempting, f.h_arrivals_normal);
    r.p_e = ratio(f.e_lost_backup, f.e_arrivals_backup);
    r.p_b_c = ratio(f.n_lost_backup, f.n_arrivals_backup);
    r.p_d_c = ratio(f.h_lost_backup, f.h_arrivals_backup);
    r.p_preempt_emr = ratio(f.e_preempting, f.e_arrivals_backup);
    r.alpha_f = f.catastrophes_busy;
    r.theta_r_succ = f.retrial_success;
    r.lambda_h = class_arrival_rate(an, kHandoff);
    r.lambda_n = class_arrival_rate(an, kNew);
    r.lambda_h_c = class_arrival_rate(ac, kHandoff);
    r.lambda_n_c = class_arrival_rate(ac, kNew);
    r.lambda_e_c = class_arrival_rate(ac, kEmergency);
    return r;
}

std::vector<std::pair<std::string, double>> report_scalars(const PerformanceReport& r) {
    return {{"E_orbit", r.e_orbit},
            {"Var_orbit", r.var_orbit},
            {"P_d_n", r.p_d_n},
            {"P_preempt_new", r.p_preempt_new},
            {"P_e", r.p_e},
            {"P_b_c", r.p_b_c},
            {"P_d_c", r.p_d_c},
            {"P_preempt_emr", r.p_preempt_emr},
            {"alpha_f", r.alpha_f},
            {"theta_r_succ", r.theta_r_succ},
            {"p_repair", r.p_repair},
            {"p_backup", r.p_backup},
            {"lambda_H", r.lambda_h},
            {"lambda_N", r.lambda_n},
            {"lambda_E", r.lambda_e_c}};
}

std::string report_to_json(const PerformanceReport& r, int indent) {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : report_scalars(r)) j[k] = v;
    j["mass"] = r.mass;
    j["levels"] = r.levels;
    j["busy_h"] = r.busy_h;
    j["busy_n"] = r.busy_n;
    j["busy_e"] = r.busy_e;
    const Fluxes& f = r.flux;
    j["flux"] = {{"h_arrivals_normal", f.h_arrivals_normal}, {"h_dropped_normal", f.h_dropped_normal},
                 {"h_preempting", f.h_preempting},           {"n_arrivals_normal", f.n_arrivals_normal},
                 {"n_to_orbit", f.n_to_orbit},               {"h_arrivals_backup", f.h_arrivals_backup},
                 {"h_lost_backup", f.h_lost_backup},         {"n_arrivals_backup", f.n_arrivals_backup},
                 {"n_lost_backup", f.n_lost_backup},         {"e_arrivals_backup", f.e_arrivals_backup},
                 {"e_lost_backup", f.e_lost_backup},         {"e_preempting", f.e_preempting},
                 {"catastrophes_busy", f.catastrophes_busy}, {"retrial_success", f.retrial_success}};
    return j.dump(indent);
}

int thread_count_from_env() {
    const char* s = std::getenv("CATQ_THREADS");
    if (!s) return 1;
    int n = std::atoi(s);
    return n >= 1 ? n : 1;
}

std::vector<SweepPoint> sweep(const ModelConfig& cfg, const std::string& param, const std::vector<double>& values,
                              int threads) {
    std::vector<SweepPoint> out(values.size());
    // reject unknown parameter names before spawning work
    if (!values.empty()) {
        ModelConfig probe = cfg;
        apply_parameter(probe, param, values.front());
    }
    std::atomic<size_t> next{0};
    auto work = [&]() {
        for (size_t k; (k = next++) < values.size();) {
            SweepPoint& pt = out[k];
            pt.value = values[k];
            try {
                ModelConfig c = cfg;
                apply_parameter(c, param, values[k]);
                ValidationReport vr = validate_config(c);
                if (!vr.ok()) throw ConfigError(vr.summary());
                pt.report = compute_report(c, solve_stationary(c));
                pt.stable = true;
            } catch (const UnstableError& e) {
                pt.error = e.what();
            } catch (const std::exception& e) {
                pt.error = e.what();
            }
        }
    };
    threads = std::max(1, std::min<int>(threads, static_cast<int>(values.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    return out;
}

}  // namespace catq
