#include "catq/nsga2.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace catq {

namespace {

double uni(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

void sbx(double& a, double& b, double lo, double hi, double eta, std::mt19937_64& rng) {
    if (uni(rng) > 0.5 || std::abs(a - b) < 1e-14 || hi <= lo) return;
    double y1 = std::min(a, b), y2 = std::max(a, b);
    double r = uni(rng);
    auto child = [&](double beta_edge) {
        double alpha = 2.0 - std::pow(beta_edge, -(eta + 1.0));
        double bq = r <= 1.0 / alpha ? std::pow(r * alpha, 1.0 / (eta + 1.0))
                                     : std::pow(1.0 / (2.0 - r * alpha), 1.0 / (eta + 1.0));
        return bq;
    };
    double bq1 = child(1.0 + 2.0 * (y1 - lo) / (y2 - y1));
    double c1 = 0.5 * ((y1 + y2) - bq1 * (y2 - y1));
    double bq2 = child(1.0 + 2.0 * (hi - y2) / (y2 - y1));
    double c2 = 0.5 * ((y1 + y2) + bq2 * (y2 - y1));
    c1 = std::clamp(c1, lo, hi);
    c2 = std::clamp(c2, lo, hi);
    if (uni(rng) <= 0.5) std::swap(c1, c2);
    a = c1;
    b = c2;
}

void poly_mutate(double& x, double lo, double hi, double eta, std::mt19937_64& rng) {
    if (hi <= lo) return;
    double d1 = (x - lo) / (hi - lo), d2 = (hi - x) / (hi - lo);
    double r = uni(rng), pw = 1.0 / (eta + 1.0), dq;
    if (r < 0.5) {
        double v = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, eta + 1.0);
        dq = std::pow(v, pw) - 1.0;
    } else {
        double v = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, eta + 1.0);
        dq = 1.0 - std::pow(v, pw);
    }
    x = std::clamp(x + dq * (hi - lo), lo, hi);
}

bool crowded_less(const Individual& a, const Individual& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.crowding > b.crowding;
}

void evaluate_all(const Problem& p, std::vector<Individual>& v, size_t from, int threads) {
    std::atomic<size_t> next{from};
    auto work = [&]() {
        for (size_t k; (k = next++) < v.size();) p.evaluate(v[k]);
    };
    const int n = std::max(1, std::min<int>(threads, static_cast<int>(v.size() - from)));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
}

void assign_ranks(std::vector<Individual>& pop) {
    auto fronts = non_dominated_sort(pop);
    for (size_t r = 0; r < fronts.size(); ++r) {
        auto cd = crowding_distance(pop, fronts[r]);
        for (size_t k = 0; k < fronts[r].size(); ++k) {
            pop[fronts[r][k]].rank = static_cast<int>(r);
            pop[fronts[r][k]].crowding = cd[k];
        }
    }
}

}  // namespace

bool constrained_dominates(const Individual& a, const Individual& b) {
    const bool fa = a.feasible(), fb = b.feasible();
    if (fa && !fb) return true;
    if (!fa && fb) return false;
    if (!fa && !fb) return a.violation < b.violation;
    bool strict = false;
    for (size_t k = 0; k < a.objectives.size(); ++k) {
        if (a.objectives[k] > b.objectives[k]) return false;
        if (a.objectives[k] < b.objectives[k]) strict = true;
    }
    return strict;
}

std::vector<std::vector<int>> non_dominated_sort(const std::vector<Individual>& pop) {
    const int n = static_cast<int>(pop.size());
    std::vector<std::vector<int>> dominated(n);
    std::vector<int> count(n, 0);
    std::vector<std::vector<int>> fronts(1);
    for (int p = 0; p < n; ++p) {
        for (int q = 0; q < n; ++q) {
            if (p == q) continue;
            if (constrained_dominates(pop[p], pop[q])) dominated[p].push_back(q);
            else if (constrained_dominates(pop[q], pop[p])) ++count[p];
        }
        if (count[p] == 0) fronts[0].push_back(p);
    }
    for (size_t i = 0; !fronts[i].empty(); ++i) {
        std::vector<int> next;
        for (int p : fronts[i])
            for (int q : dominated[p])
                if (--count[q] == 0) next.push_back(q);
        std::sort(next.begin(), next.end());
        fronts.push_back(next);
    }
    fronts.pop_back();
    return fronts;
}

std::vector<double> crowding_distance(const std::vector<Individual>& pop, const std::vector<int>& front) {
    const size_t n = front.size();
    std::vector<double> d(n, 0.0);
    if (n == 0) return d;
    const double inf = std::numeric_limits<double>::infinity();
    if (n <= 2) return std::vector<double>(n, inf);
    const size_t m = pop[front[0]].objectives.size();
    std::vector<size_t> order(n);
    for (size_t k = 0; k < m; ++k) {
        for (size_t i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return pop[front[a]].objectives[k] < pop[front[b]].objectives[k];
        });
        const double lo = pop[front[order.front()]].objectives[k];
        const double hi = pop[front[order.back()]].objectives[k];
        d[order.front()] = inf;
        d[order.back()] = inf;
        if (hi - lo <= 0.0) continue;
        for (size_t i = 1; i + 1 < n; ++i)
            d[order[i]] += (pop[front[order[i + 1]]].objectives[k] - pop[front[order[i - 1]]].objectives[k]) / (hi - lo);
    }
    return d;
}

Nsga2Result run_nsga2(const Problem& p, const Nsga2Settings& s, int threads) {
    if (s.population < 4 || s.population % 2) throw std::invalid_argument("nsga2: population must be even and >= 4");
    std::mt19937_64 rng(s.seed);
    const size_t ni = p.int_bounds.size(), nr = p.real_bounds.size();
    const double pm = s.mutation_prob >= 0.0 ? s.mutation_prob : 1.0 / static_cast<double>(std::max<size_t>(1, ni + nr));
    Nsga2Result res;

    auto fix = [&](Individual& x) {
        for (size_t k = 0; k < ni; ++k) x.ints[k] = std::clamp(x.ints[k], p.int_bounds[k].first, p.int_bounds[k].second);
        for (size_t k = 0; k < nr; ++k) x.reals[k] = std::clamp(x.reals[k], p.real_bounds[k].first, p.real_bounds[k].second);
        if (p.repair) p.repair(x);
    };

    std::vector<Individual> pop(s.population);
    for (auto& x : pop) {
        for (auto [lo, hi] : p.int_bounds) x.ints.push_back(std::uniform_int_distribution<int>(lo, hi)(rng));
        for (auto [lo, hi] : p.real_bounds) x.reals.push_back(lo + (hi - lo) * uni(rng));
        fix(x);
    }
    evaluate_all(p, pop, 0, threads);
    res.evaluations += s.population;
    assign_ranks(pop);

    auto tournament = [&]() -> const Individual& {
        std::uniform_int_distribution<int> pick(0, s.population - 1);
        const Individual& a = pop[pick(rng)];
        const Individual& b = pop[pick(rng)];
        return crowded_less(b, a) ? b : a;
    };

    using Genes = std::pair<std::vector<int>, std::vector<double>>;
    auto mutate = [&](Individual& c, double prob) {
        for (size_t k = 0; k < ni; ++k)
            if (uni(rng) < prob) c.ints[k] += uni(rng) < 0.5 ? -1 : 1;
        for (size_t k = 0; k < nr; ++k)
            if (uni(rng) < prob) poly_mutate(c.reals[k], p.real_bounds[k].first, p.real_bounds[k].second, s.pm_eta, rng);
        fix(c);
    };

    for (int g = 0; g < s.generations; ++g) {
        std::vector<Individual> all = pop;
        std::set<Genes> present;
        for (const auto& x : pop) present.insert({x.ints, x.reals});
        while (static_cast<int>(all.size()) < 2 * s.population) {
            Individual c1 = tournament(), c2 = tournament();
            if (uni(rng) < s.crossover_prob) {
                for (size_t k = 0; k < ni; ++k)
                    if (uni(rng) < 0.5) std::swap(c1.ints[k], c2.ints[k]);
                for (size_t k = 0; k < nr; ++k)
                    sbx(c1.reals[k], c2.reals[k], p.real_bounds[k].first, p.real_bounds[k].second, s.sbx_eta, rng);
            }
            for (Individual* c : {&c1, &c2}) {
                mutate(*c, pm);
                // clones are mutated in every gene, a few tries at most
                for (int t = 0; t < 8 && present.count({c->ints, c->reals}); ++t) mutate(*c, 1.0);
                present.insert({c->ints, c->reals});
                c->objectives.clear();
                c->extras.clear();
                all.push_back(*c);
            }
        }
        evaluate_all(p, all, pop.size(), threads);
        res.evaluations += s.population;

        auto fronts = non_dominated_sort(all);
        std::vector<Individual> next;
        for (const auto& f : fronts) {
            auto cd = crowding_distance(all, f);
            std::vector<size_t> idx(f.size());
            for (size_t k = 0; k < f.size(); ++k) idx[k] = k;
            if (next.size() + f.size() > static_cast<size_t>(s.population))
                std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return cd[a] > cd[b]; });
            for (size_t k : idx) {
                if (next.size() == static_cast<size_t>(s.population)) break;
                next.push_back(all[f[k]]);
            }
            if (next.size() == static_cast<size_t>(s.population)) break;
        }
        pop = std::move(next);
        assign_ranks(pop);

        int nf = 0, feas = 0;
        double best_v = std::numeric_limits<double>::infinity();
        for (const auto& x : pop) {
            if (x.rank == 0) ++nf;
            if (x.feasible()) ++feas;
            best_v = std::min(best_v, x.violation);
        }
        std::ostringstream os;
        os << "generation " << g + 1 << ": front " << nf << ", feasible " << feas << "/" << s.population
           << ", best violation " << best_v;
        res.log.push_back(os.str());
    }

    std::set<std::pair<std::vector<int>, std::vector<double>>> seen;
    for (const auto& x : pop)
        if (x.rank == 0 && seen.insert({x.ints, x.reals}).second) res.front.push_back(x);
    res.feasible = !res.front.empty() && res.front.front().feasible();
    res.population = std::move(pop);
    return res;
}

double hypervolume_2d(std::vector<std::pair<double, double>> pts, std::pair<double, double> ref) {
    std::sort(pts.begin(), pts.end());
    std::vector<std::pair<double, double>> stair;
    double best_y = ref.second;
    for (const auto& q : pts)
        if (q.first < ref.first && q.second < best_y) {
            stair.push_back(q);
            best_y = q.second;
        }
    double hv = 0.0;
    for (size_t k = 0; k < stair.size(); ++k) {
        const double next_x = k + 1 < stair.size() ? stair[k + 1].first : ref.first;
        hv += (next_x - stair[k].first) * (ref.second - stair[k].second);
    }
    return hv;
}

}  // namespace catq
