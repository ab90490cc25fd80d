#include "catq/simulation.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace catq {

namespace {

enum class Mode { Normal, RepairOnly, Backup };

enum Acc {
    aTime, aOrbit, aRepair, aBackup,
    aHArrN, aHDrop, aHPre, aNArrN,
    aHArrB, aHLostB, aNArrB, aNLostB, aEArrB, aELostB, aEPre,
    aCatBusy, aRetryOk,
    aCount
};

enum class Ev { Mmap, Map, SrvH, SrvN, SrvE, Orbit, Repair };

struct Clock {
    double rate;
    Ev kind;
    int idx;
};

class Sim {
public:
    Sim(const ModelConfig& c, unsigned long long seed) : cfg_(c), rng_(seed) {
        v1_ = draw(stationary_distribution(c.arrivals_normal.generator()));
        v2_ = draw(stationary_distribution(c.catastrophe.d0 + c.catastrophe.d1));
    }

    void step(std::vector<double>* acc) {
        clocks_.clear();
        const MarkedArrivalProcess& mm = mode_ == Mode::Normal ? cfg_.arrivals_normal : cfg_.arrivals_catastrophic;
        push(-mm.c0(v1_, v1_), Ev::Mmap, 0);
        push(-cfg_.catastrophe.d0(v2_, v2_), Ev::Map, 0);
        const double sc = mode_ == Mode::Backup ? cfg_.backup_rate_scale : 1.0;
        for (size_t k = 0; k < h_.size(); ++k) push(-sc * cfg_.service_h.subgen(h_[k], h_[k]), Ev::SrvH, static_cast<int>(k));
        for (size_t k = 0; k < n_.size(); ++k) push(-sc * cfg_.service_n.subgen(n_[k], n_[k]), Ev::SrvN, static_cast<int>(k));
        for (size_t k = 0; k < e_.size(); ++k) push(-sc * cfg_.service_e.subgen(e_[k], e_[k]), Ev::SrvE, static_cast<int>(k));
        const double rho = cfg_.retrial.level_factor(level(), cfg_.M);
        for (size_t k = 0; k < active_.size(); ++k)
            push(-rho * cfg_.retrial.subgen(active_[k], active_[k]), Ev::Orbit, static_cast<int>(k));
        for (size_t k = 0; k < rep_.size(); ++k) push(-cfg_.repair.subgen(rep_[k], rep_[k]), Ev::Repair, static_cast<int>(k));

        double total = 0.0;
        for (const Clock& c : clocks_) total += c.rate;
        const double dt = -std::log(uniform_pos()) / total;
        if (acc) {
            auto& a = *acc;
            a[aTime] += dt;
            a[aOrbit] += dt * level();
            if (mode_ != Mode::Normal) a[aRepair] += dt;
            if (mode_ == Mode::Backup) a[aBackup] += dt;
        }
        double u = uniform() * total;
        const Clock* hit = &clocks_.back();
        for (const Clock& c : clocks_) {
            if (u < c.rate) {
                hit = &c;
                break;
            }
            u -= c.rate;
        }
        acc_ = acc;
        switch (hit->kind) {
            case Ev::Mmap: mmap_event(mm); break;
            case Ev::Map: map_event(); break;
            case Ev::SrvH: server_event(h_, hit->idx, cfg_.service_h); break;
            case Ev::SrvN: server_event(n_, hit->idx, cfg_.service_n); break;
            case Ev::SrvE: server_event(e_, hit->idx, cfg_.service_e); break;
            case Ev::Orbit: orbit_event(hit->idx); break;
            case Ev::Repair: repair_event(hit->idx); break;
        }
    }

private:
    void push(double rate, Ev kind, int idx) {
        if (rate > 0.0) clocks_.push_back({rate, kind, idx});
    }
    void count(Acc a) {
        if (acc_) (*acc_)[a] += 1.0;
    }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
    double uniform_pos() {
        double u;
        do u = uniform(); while (u <= 0.0);
        return u;
    }
    int draw(const RowVec& p) {
        double u = uniform() * p.sum();
        for (int k = 0; k < p.size(); ++k) {
            if (u < p(k)) return k;
            u -= p(k);
        }
        for (int k = static_cast<int>(p.size()); k-- > 0;)
            if (p(k) > 0.0) return k;
        return 0;
    }
    int level() const { return static_cast<int>(active_.size()) + dormant_; }
    int busy() const { return static_cast<int>(h_.size() + n_.size() + e_.size()); }

    void join_orbit() {
        if (static_cast<int>(active_.size()) < cfg_.M) active_.push_back(draw(cfg_.retrial.gamma));
        else ++dormant_;
    }
    void leave_orbit(int k) {
        active_.erase(active_.begin() + k);
        if (dormant_ > 0) {
            --dormant_;
            active_.push_back(draw(cfg_.retrial.gamma));
        }
    }
    void remove_random(std::vector<int>& calls) {
        std::uniform_int_distribution<size_t> pick(0, calls.size() - 1);
        calls.erase(calls.begin() + static_cast<long>(pick(rng_)));
    }

    void mmap_event(const MarkedArrivalProcess& mm) {
        const int L = mm.dim();
        // row of (C0 off-diagonal, class 0, class 1, ...) targets
        double u = uniform() * (-mm.c0(v1_, v1_));
        int cls = -1, w = v1_;
        for (int j = 0; j < L && cls == -1; ++j) {
            if (j == v1_) continue;
            if (u < mm.c0(v1_, j)) { w = j; cls = -2; break; }
            u -= mm.c0(v1_, j);
        }
        for (size_t k = 0; k < mm.marks.size() && cls == -1; ++k)
            for (int j = 0; j < L; ++j) {
                if (u < mm.marks[k](v1_, j)) { w = j; cls = static_cast<int>(k); break; }
                u -= mm.marks[k](v1_, j);
            }
        if (cls == -1) {
            // rounding at the end of the row: take the last positive entry
            for (size_t k = mm.marks.size(); k-- > 0 && cls == -1;)
                for (int j = L; j-- > 0;)
                    if (mm.marks[k](v1_, j) > 0.0) { w = j; cls = static_cast<int>(k); break; }
        }
        v1_ = w;
        if (cls < 0) return;
        if (mode_ == Mode::Normal) normal_arrival(cls);
        else if (mode_ == Mode::Backup) backup_arrival(cls);
    }

    void normal_arrival(int cls) {
        const bool full = busy() >= cfg_.S;
        if (cls == kHandoff) {
            count(aHArrN);
            if (!full) {
                h_.push_back(draw(cfg_.service_h.beta));
            } else if (static_cast<int>(h_.size()) < cfg_.K2 && !n_.empty()) {
                count(aHPre);
                remove_random(n_);
                h_.push_back(draw(cfg_.service_h.beta));
                join_orbit();
            } else {
                count(aHDrop);
            }
        } else if (cls == kNew) {
            count(aNArrN);
            if (!full) n_.push_back(draw(cfg_.service_n.beta));
            else join_orbit();
        }
    }

    void backup_arrival(int cls) {
        const bool full = busy() >= cfg_.K;
        if (cls == kHandoff) {
            count(aHArrB);
            if (full) count(aHLostB);
            else h_.push_back(draw(cfg_.service_h.beta));
        } else if (cls == kNew) {
            count(aNArrB);
            if (full) count(aNLostB);
            else n_.push_back(draw(cfg_.service_n.beta));
        } else {
            count(aEArrB);
            if (!full) {
                e_.push_back(draw(cfg_.service_e.beta));
            } else if (static_cast<int>(e_.size()) < cfg_.K1 && !(n_.empty() && h_.empty())) {
                count(aEPre);
                remove_random(n_.empty() ? h_ : n_);
                e_.push_back(draw(cfg_.service_e.beta));
            } else {
                count(aELostB);
            }
        }
    }

    void map_event() {
        const Mat& d0 = cfg_.catastrophe.d0;
        const Mat& d1 = cfg_.catastrophe.d1;
        const int L = static_cast<int>(d0.rows());
        double u = uniform() * (-d0(v2_, v2_));
        bool cat = false;
        int w = v2_;
        bool found = false;
        for (int j = 0; j < L && !found; ++j) {
            if (j == v2_) continue;
            if (u < d0(v2_, j)) { w = j; found = true; break; }
            u -= d0(v2_, j);
        }
        for (int j = 0; j < L && !found; ++j) {
            if (u < d1(v2_, j)) { w = j; cat = true; found = true; break; }
            u -= d1(v2_, j);
        }
        if (!found) {
            for (int j = L; j-- > 0;)
                if (d1(v2_, j) > 0.0) { w = j; cat = true; break; }
        }
        v2_ = w;
        if (!cat || mode_ != Mode::Normal) return;
        const int b = busy();
        if (b == 0) return;
        count(aCatBusy);
        h_.clear();
        n_.clear();
        active_.clear();
        dormant_ = 0;
        rep_.clear();
        for (int k = 0; k < b; ++k) rep_.push_back(draw(cfg_.repair.beta));
        mode_ = b == cfg_.S ? Mode::Backup : Mode::RepairOnly;
    }

    void server_event(std::vector<int>& calls, int k, const PhaseType& ph) {
        const int p = calls[k];
        double u = uniform() * (-ph.subgen(p, p));
        for (int j = 0; j < ph.dim(); ++j) {
            if (j == p) continue;
            if (u < ph.subgen(p, j)) {
                calls[k] = j;
                return;
            }
            u -= ph.subgen(p, j);
        }
        calls.erase(calls.begin() + k);
    }

    void orbit_event(int k) {
        const RetrialProcess& r = cfg_.retrial;
        const int p = active_[k];
        double u = uniform() * (-r.subgen(p, p));
        for (int j = 0; j < r.dim(); ++j) {
            if (j == p) continue;
            if (u < r.subgen(p, j)) {
                active_[k] = j;
                return;
            }
            u -= r.subgen(p, j);
        }
        if (u < r.exit_abandon(p)) {
            leave_orbit(k);
            return;
        }
        if (busy() < cfg_.S) {
            count(aRetryOk);
            leave_orbit(k);
            n_.push_back(draw(cfg_.service_n.beta));
        } else {
            active_[k] = draw(r.gamma);
        }
    }

    void repair_event(int k) {
        const PhaseType& b = cfg_.repair;
        const int p = rep_[k];
        double u = uniform() * (-b.subgen(p, p));
        for (int j = 0; j < b.dim(); ++j) {
            if (j == p) continue;
            if (u < b.subgen(p, j)) {
                rep_[k] = j;
                return;
            }
            u -= b.subgen(p, j);
        }
        rep_.erase(rep_.begin() + k);
        h_.clear();
        n_.clear();
        e_.clear();
        mode_ = rep_.empty() ? Mode::Normal : Mode::RepairOnly;
    }

    const ModelConfig& cfg_;
    std::mt19937_64 rng_;
    Mode mode_ = Mode::Normal;
    int v1_ = 0, v2_ = 0;
    std::vector<int> h_, n_, e_, active_, rep_;
    int dormant_ = 0;
    std::vector<Clock> clocks_;
    std::vector<double>* acc_ = nullptr;
};

Estimate ratio(const std::string& name, const std::vector<std::vector<double>>& b, Acc num, Acc den, bool is_count) {
    double sx = 0, sy = 0;
    for (const auto& v : b) {
        sx += v[num];
        sy += v[den];
    }
    Estimate e;
    e.name = name;
    e.count = is_count ? sx : 0.0;
    if (sy <= 0.0) return e;
    e.mean = sx / sy;
    const double nb = static_cast<double>(b.size());
    double ss = 0.0;
    for (const auto& v : b) {
        double d = v[num] - e.mean * v[den];
        ss += d * d;
    }
    e.se = std::sqrt(ss / (nb * (nb - 1.0))) / (sy / nb);
    return e;
}

}  // namespace

const Estimate& SimulationEstimate::get(const std::string& name) const {
    for (const auto& e : estimates)
        if (e.name == name) return e;
    throw std::out_of_range("no estimate named " + name);
}

SimulationEstimate simulate(const ModelConfig& cfg, const SimulationSettings& s) {
    if (s.events < s.batches || s.batches < 2) throw std::invalid_argument("simulate: need events >= batches >= 2");
    Sim sim(cfg, s.seed);
    const long long warm = s.warmup < 0 ? s.events / 100 : s.warmup;
    for (long long k = 0; k < warm; ++k) sim.step(nullptr);
    std::vector<std::vector<double>> acc(s.batches, std::vector<double>(aCount, 0.0));
    for (int b = 0; b < s.batches; ++b) {
        const long long lo = s.events * b / s.batches, hi = s.events * (b + 1) / s.batches;
        for (long long k = lo; k < hi; ++k) sim.step(&acc[b]);
    }
    SimulationEstimate out;
    out.events = s.events;
    out.batches = s.batches;
    for (const auto& v : acc) out.sim_time += v[aTime];
    out.estimates = {
        ratio("E_orbit", acc, aOrbit, aTime, false),
        ratio("P_d_n", acc, aHDrop, aHArrN, true),
        ratio("P_preempt_new", acc, aHPre, aHArrN, true),
        ratio("P_e", acc, aELostB, aEArrB, true),
        ratio("P_b_c", acc, aNLostB, aNArrB, true),
        ratio("P_d_c", acc, aHLostB, aHArrB, true),
        ratio("P_preempt_emr", acc, aEPre, aEArrB, true),
        ratio("alpha_f", acc, aCatBusy, aTime, true),
        ratio("theta_r_succ", acc, aRetryOk, aTime, true),
        ratio("p_repair", acc, aRepair, aTime, false),
        ratio("p_backup", acc, aBackup, aTime, false),
    };
    return out;
}

std::string simulation_to_json(const SimulationEstimate& e, int indent) {
    nlohmann::ordered_json j;
    j["events"] = e.events;
    j["sim_time"] = e.sim_time;
    j["batches"] = e.batches;
    nlohmann::ordered_json m;
    for (const auto& x : e.estimates) m[x.name] = {{"mean", x.mean}, {"se", x.se}, {"count", x.count}};
    j["estimates"] = m;
    return j.dump(indent);
}

}  // namespace catq
