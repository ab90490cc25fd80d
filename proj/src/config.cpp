#include "catq/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "catq/errors.hpp"

namespace catq {

using nlohmann::json;

namespace {

void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

const json& need(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) fail(path, "missing key '" + key + "'");
    return j.at(key);
}

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) fail(path, "unknown key '" + it.key() + "'");
}

double num(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

Mat matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty list of rows");
    const size_t rows = j.size();
    if (!j[0].is_array() || j[0].empty()) fail(path, "rows must be non-empty lists");
    const size_t cols = j[0].size();
    Mat m(rows, cols);
    for (size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) fail(path, "ragged matrix rows");
        for (size_t c = 0; c < cols; ++c) m(r, c) = num(j[r][c], path);
    }
    return m;
}

Vec vec(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty list");
    Vec v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v(i) = num(j[i], path);
    return v;
}

json to_rows(const Mat& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

json to_list(const Eigen::Ref<const Vec>& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

MarkedArrivalProcess parse_mmap(const json& j, const std::string& path, bool with_e) {
    std::set<std::string> keys{"C0", "H", "N"};
    if (with_e) keys.insert("E");
    only_keys(j, keys, path);
    MarkedArrivalProcess m;
    m.c0 = matrix(need(j, "C0", path), path + ".C0");
    m.marks.push_back(matrix(need(j, "H", path), path + ".H"));
    m.marks.push_back(matrix(need(j, "N", path), path + ".N"));
    if (with_e) m.marks.push_back(matrix(need(j, "E", path), path + ".E"));
    return m;
}

PhaseType parse_ph(const json& j, const std::string& path) {
    if (j.is_object() && j.contains("rate")) {
        only_keys(j, {"rate"}, path);
        double rate = num(j.at("rate"), path + ".rate");
        if (!(rate > 0.0)) fail(path + ".rate", "must be positive");
        return exponential_ph(rate);
    }
    only_keys(j, {"beta", "A"}, path);
    PhaseType p;
    p.beta = vec(need(j, "beta", path), path + ".beta").transpose();
    p.subgen = matrix(need(j, "A", path), path + ".A");
    return p;
}

RetrialProcess parse_retrial(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    RetrialProcess r;
    if (j.contains("rate")) {
        only_keys(j, {"rate", "abandon_fraction", "level_rates"}, path);
        double p = j.contains("abandon_fraction") ? num(j["abandon_fraction"], path + ".abandon_fraction") : 0.0;
        double rate = num(j.at("rate"), path + ".rate");
        if (!(rate > 0.0)) fail(path + ".rate", "must be positive");
        r = make_retrial(RowVec::Ones(1), Mat::Constant(1, 1, -1.0), rate, p);
    } else if (j.contains("exit_abandon") || j.contains("exit_retry")) {
        only_keys(j, {"gamma", "Gamma", "exit_abandon", "exit_retry", "level_rates"}, path);
        r.gamma = vec(need(j, "gamma", path), path + ".gamma").transpose();
        r.subgen = matrix(need(j, "Gamma", path), path + ".Gamma");
        r.exit_abandon = vec(need(j, "exit_abandon", path), path + ".exit_abandon");
        r.exit_retry = vec(need(j, "exit_retry", path), path + ".exit_retry");
    } else {
        only_keys(j, {"gamma", "Gamma", "theta", "abandon_fraction", "level_rates"}, path);
        RowVec g = vec(need(j, "gamma", path), path + ".gamma").transpose();
        Mat G = matrix(need(j, "Gamma", path), path + ".Gamma");
        if (G.rows() != G.cols() || G.rows() != g.size()) fail(path, "gamma/Gamma dimension mismatch");
        double p = j.contains("abandon_fraction") ? num(j["abandon_fraction"], path + ".abandon_fraction") : 0.0;
        double theta = j.contains("theta") ? num(j["theta"], path + ".theta") : ph_fundamental_rate(g, G);
        if (!(theta > 0.0)) fail(path + ".theta", "must be positive");
        r = make_retrial(g, G, theta, p);
    }
    if (j.contains("level_rates")) {
        Vec lr = vec(j["level_rates"], path + ".level_rates");
        r.level_rates.assign(lr.data(), lr.data() + lr.size());
    }
    return r;
}

SolverSettings parse_solver(const json& j, const std::string& path) {
    only_keys(j, {"delta", "eps_g", "eps_f", "s_multiplier", "max_level"}, path);
    SolverSettings s;
    if (j.contains("delta")) s.delta = num(j["delta"], path + ".delta");
    if (j.contains("eps_g")) s.eps_g = num(j["eps_g"], path + ".eps_g");
    if (j.contains("eps_f")) s.eps_f = num(j["eps_f"], path + ".eps_f");
    if (j.contains("s_multiplier")) s.s_multiplier = integer(j["s_multiplier"], path + ".s_multiplier");
    if (j.contains("max_level")) s.max_level = integer(j["max_level"], path + ".max_level");
    if (!(s.delta > 0 && s.eps_g > 0 && s.eps_f > 0)) fail(path, "tolerances must be positive");
    if (s.s_multiplier < 1 || s.max_level < 2) fail(path, "s_multiplier >= 1 and max_level >= 2 required");
    return s;
}

std::pair<double, double> bounds(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) fail(path, "expected [min, max]");
    double lo = num(j[0], path), hi = num(j[1], path);
    if (!(lo > 0.0 && hi >= lo)) fail(path, "need 0 < min <= max");
    return {lo, hi};
}

Nsga2Settings parse_nsga2(const json& j, const std::string& path) {
    only_keys(j, {"population", "generations", "crossover_prob", "mutation_prob", "sbx_eta", "pm_eta",
                  "seed", "lambda_E", "mu_E", "eps_e", "eps_b", "eps_p"},
              path);
    Nsga2Settings n;
    if (j.contains("population")) n.population = integer(j["population"], path + ".population");
    if (j.contains("generations")) n.generations = integer(j["generations"], path + ".generations");
    if (j.contains("crossover_prob")) n.crossover_prob = num(j["crossover_prob"], path + ".crossover_prob");
    if (j.contains("mutation_prob")) n.mutation_prob = num(j["mutation_prob"], path + ".mutation_prob");
    if (j.contains("sbx_eta")) n.sbx_eta = num(j["sbx_eta"], path + ".sbx_eta");
    if (j.contains("pm_eta")) n.pm_eta = num(j["pm_eta"], path + ".pm_eta");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) fail(path + ".seed", "expected a nonnegative integer");
        n.seed = j["seed"].get<unsigned long long>();
    }
    if (j.contains("lambda_E")) std::tie(n.lambda_e_min, n.lambda_e_max) = bounds(j["lambda_E"], path + ".lambda_E");
    if (j.contains("mu_E")) std::tie(n.mu_e_min, n.mu_e_max) = bounds(j["mu_E"], path + ".mu_E");
    if (j.contains("eps_e")) n.eps_e = num(j["eps_e"], path + ".eps_e");
    if (j.contains("eps_b")) n.eps_b = num(j["eps_b"], path + ".eps_b");
    if (j.contains("eps_p")) n.eps_p = num(j["eps_p"], path + ".eps_p");
    if (n.population < 4 || n.population % 2 != 0) fail(path + ".population", "must be an even number >= 4");
    if (n.generations < 1) fail(path + ".generations", "must be >= 1");
    return n;
}

json ph_json(const PhaseType& p) { return {{"beta", to_list(p.beta.transpose())}, {"A", to_rows(p.subgen)}}; }

// Solve f(sigma) = target for an increasing f with f(0) = 0 by bisection on log sigma.
template <class F>
double solve_scale(F f, double target, const std::string& what) {
    if (target < 0.0) fail(what, "target must be nonnegative");
    if (target == 0.0) return 0.0;
    double lo = 1.0, hi = 1.0;
    double flo = f(lo);
    if (!(flo > 0.0)) fail(what, "cannot rescale a zero-rate component");
    while (f(lo) > target) {
        lo /= 2.0;
        if (lo < 1e-300) fail(what, "target out of range");
    }
    while (f(hi) < target) {
        hi *= 2.0;
        if (hi > 1e300) fail(what, "target out of range");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        double mid = std::sqrt(lo * hi);
        if (mid <= lo || mid >= hi) mid = 0.5 * (lo + hi);
        if (f(mid) < target) lo = mid; else hi = mid;
    }
    double a = f(lo), b = f(hi);
    return std::abs(a - target) <= std::abs(b - target) ? lo : hi;
}

}  // namespace

ValidationReport validate_config(const ModelConfig& c) {
    ValidationReport r;
    auto bad = [&](const std::string& p, const std::string& m) { r.issues.push_back(p + ": " + m); };
    if (c.S < 1) bad("S", "must be >= 1");
    if (c.K < 0 || c.K > c.S) bad("K", "must satisfy 0 <= K <= S");
    if (c.K1 < 0 || c.K1 > c.K) bad("K1", "must satisfy 0 <= K1 <= K");
    if (c.K2 < 0 || c.K2 > c.S) bad("K2", "must satisfy 0 <= K2 <= S");
    if (c.M < 1) bad("M", "must be >= 1");
    if (!(c.backup_rate_scale > 0.0)) bad("backup_rate_scale", "must be positive");
    r.merge(validate(c.arrivals_normal, "arrivals_normal"));
    r.merge(validate(c.arrivals_catastrophic, "arrivals_catastrophic"));
    r.merge(validate(c.catastrophe, "catastrophe"));
    r.merge(validate(c.service_h, "service_h"));
    r.merge(validate(c.service_n, "service_n"));
    r.merge(validate(c.service_e, "service_e"));
    r.merge(validate(c.repair, "repair"));
    r.merge(validate(c.retrial, "retrial"));
    if (c.arrivals_normal.marks.size() != 2) bad("arrivals_normal", "needs exactly the H and N classes");
    if (c.arrivals_catastrophic.marks.size() != 3) bad("arrivals_catastrophic", "needs the H, N and E classes");
    if (c.arrivals_normal.dim() != c.arrivals_catastrophic.dim())
        bad("arrivals_catastrophic", "phase dimension must equal that of arrivals_normal");
    if (!c.retrial.level_rates.empty() && static_cast<int>(c.retrial.level_rates.size()) != c.M + 1)
        bad("retrial.level_rates", "must list theta_0..theta_M");
    return r;
}

ModelConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    only_keys(j, {"S", "K", "K1", "K2", "M", "arrivals_normal", "arrivals_catastrophic", "catastrophe",
                  "service_h", "service_n", "service_e", "repair", "retrial", "backup_rate_scale", "solver",
                  "nsga2", "comment"},
              "config");
    ModelConfig c;
    c.S = integer(need(j, "S", "config"), "S");
    c.K = integer(need(j, "K", "config"), "K");
    c.K1 = integer(need(j, "K1", "config"), "K1");
    c.K2 = integer(need(j, "K2", "config"), "K2");
    c.M = integer(need(j, "M", "config"), "M");
    c.arrivals_normal = parse_mmap(need(j, "arrivals_normal", "config"), "arrivals_normal", false);
    c.arrivals_catastrophic = parse_mmap(need(j, "arrivals_catastrophic", "config"), "arrivals_catastrophic", true);
    const json& cat = need(j, "catastrophe", "config");
    if (cat.is_object() && cat.contains("rate")) {
        only_keys(cat, {"rate"}, "catastrophe");
        double rate = num(cat["rate"], "catastrophe.rate");
        if (rate < 0.0) fail("catastrophe.rate", "must be nonnegative");
        c.catastrophe = {Mat::Constant(1, 1, -rate), Mat::Constant(1, 1, rate)};
    } else {
        only_keys(cat, {"D0", "D1"}, "catastrophe");
        c.catastrophe.d0 = matrix(need(cat, "D0", "catastrophe"), "catastrophe.D0");
        c.catastrophe.d1 = matrix(need(cat, "D1", "catastrophe"), "catastrophe.D1");
    }
    c.service_h = parse_ph(need(j, "service_h", "config"), "service_h");
    c.service_n = parse_ph(need(j, "service_n", "config"), "service_n");
    c.service_e = parse_ph(need(j, "service_e", "config"), "service_e");
    c.repair = parse_ph(need(j, "repair", "config"), "repair");
    c.retrial = parse_retrial(need(j, "retrial", "config"), "retrial");
    if (j.contains("backup_rate_scale")) c.backup_rate_scale = num(j["backup_rate_scale"], "backup_rate_scale");
    if (j.contains("solver")) c.solver = parse_solver(j["solver"], "solver");
    if (j.contains("nsga2")) c.nsga2 = parse_nsga2(j["nsga2"], "nsga2");
    return c;
}

ModelConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ModelConfig& c, int indent) {
    json j;
    j["S"] = c.S;
    j["K"] = c.K;
    j["K1"] = c.K1;
    j["K2"] = c.K2;
    j["M"] = c.M;
    j["arrivals_normal"] = {{"C0", to_rows(c.arrivals_normal.c0)},
                            {"H", to_rows(c.arrivals_normal.mark(kHandoff))},
                            {"N", to_rows(c.arrivals_normal.mark(kNew))}};
    j["arrivals_catastrophic"] = {{"C0", to_rows(c.arrivals_catastrophic.c0)},
                                  {"H", to_rows(c.arrivals_catastrophic.mark(kHandoff))},
                                  {"N", to_rows(c.arrivals_catastrophic.mark(kNew))},
                                  {"E", to_rows(c.arrivals_catastrophic.mark(kEmergency))}};
    j["catastrophe"] = {{"D0", to_rows(c.catastrophe.d0)}, {"D1", to_rows(c.catastrophe.d1)}};
    j["service_h"] = ph_json(c.service_h);
    j["service_n"] = ph_json(c.service_n);
    j["service_e"] = ph_json(c.service_e);
    j["repair"] = ph_json(c.repair);
    json r = {{"gamma", to_list(c.retrial.gamma.transpose())},
              {"Gamma", to_rows(c.retrial.subgen)},
              {"exit_abandon", to_list(c.retrial.exit_abandon)},
              {"exit_retry", to_list(c.retrial.exit_retry)}};
    if (!c.retrial.level_rates.empty()) r["level_rates"] = c.retrial.level_rates;
    j["retrial"] = r;
    j["backup_rate_scale"] = c.backup_rate_scale;
    j["solver"] = {{"delta", c.solver.delta},
                   {"eps_g", c.solver.eps_g},
                   {"eps_f", c.solver.eps_f},
                   {"s_multiplier", c.solver.s_multiplier},
                   {"max_level", c.solver.max_level}};
    if (c.nsga2) {
        const Nsga2Settings& n = *c.nsga2;
        j["nsga2"] = {{"population", n.population},
                      {"generations", n.generations},
                      {"crossover_prob", n.crossover_prob},
                      {"mutation_prob", n.mutation_prob},
                      {"sbx_eta", n.sbx_eta},
                      {"pm_eta", n.pm_eta},
                      {"seed", n.seed},
                      {"lambda_E", {n.lambda_e_min, n.lambda_e_max}},
                      {"mu_E", {n.mu_e_min, n.mu_e_max}},
                      {"eps_e", n.eps_e},
                      {"eps_b", n.eps_b},
                      {"eps_p", n.eps_p}};
    }
    return j.dump(indent);
}

MarkedArrivalProcess with_class_rate(const MarkedArrivalProcess& m, int cls, double target) {
    double sigma = solve_scale(
        [&](double s) { return class_arrival_rate(m.with_class_scaled(cls, s), cls); }, target,
        "class rate");
    return m.with_class_scaled(cls, sigma);
}

PhaseType with_fundamental_rate(const PhaseType& p, double target) {
    if (!(target > 0.0)) fail("service rate", "must be positive");
    return p.scaled(target / ph_fundamental_rate(p));
}

void apply_parameter(ModelConfig& c, const std::string& name, double value) {
    auto as_int = [&]() {
        if (value != std::floor(value)) fail(name, "expects an integer value");
        return static_cast<int>(value);
    };
    auto cls_of = [&](char k) {
        if (k == 'H') return static_cast<int>(kHandoff);
        if (k == 'N') return static_cast<int>(kNew);
        if (k == 'E') return static_cast<int>(kEmergency);
        fail(name, "unknown call class");
        return 0;
    };
    if (name == "S") { c.S = as_int(); return; }
    if (name == "K") { c.K = as_int(); return; }
    if (name == "K1") { c.K1 = as_int(); return; }
    if (name == "K2") { c.K2 = as_int(); return; }
    if (name == "M") { c.M = as_int(); return; }
    if (name == "backup_rate_scale") { c.backup_rate_scale = value; return; }

    auto dot = name.find('.');
    if (dot == std::string::npos) fail(name, "unknown parameter");
    std::string head = name.substr(0, dot), tail = name.substr(dot + 1);

    if (head == "arrivals_normal" || head == "arrivals_catastrophic") {
        MarkedArrivalProcess& m = head == "arrivals_normal" ? c.arrivals_normal : c.arrivals_catastrophic;
        bool is_rate = tail.rfind("rate_", 0) == 0, is_scale = tail.rfind("scale_", 0) == 0;
        if ((!is_rate && !is_scale) || tail.size() != (is_rate ? 6u : 7u)) fail(name, "unknown parameter");
        int cls = cls_of(tail.back());
        if (cls >= static_cast<int>(m.marks.size())) fail(name, "class not present in this process");
        if (value < 0.0) fail(name, "must be nonnegative");
        m = is_rate ? with_class_rate(m, cls, value) : m.with_class_scaled(cls, value);
        return;
    }
    if (head == "catastrophe") {
        if (value < 0.0) fail(name, "must be nonnegative");
        if (tail == "scale") { c.catastrophe = c.catastrophe.scaled(value); return; }
        if (tail == "rate") {
            MarkedArrivalProcess m = with_class_rate(c.catastrophe.as_marked(), 0, value);
            c.catastrophe = {m.c0, m.marks[0]};
            return;
        }
        fail(name, "unknown parameter");
    }
    if (head == "service_h" || head == "service_n" || head == "service_e" || head == "repair") {
        PhaseType& p = head == "service_h" ? c.service_h
                     : head == "service_n" ? c.service_n
                     : head == "service_e" ? c.service_e
                                           : c.repair;
        if (!(value > 0.0)) fail(name, "must be positive");
        if (tail == "rate") { p = with_fundamental_rate(p, value); return; }
        if (tail == "scale") { p = p.scaled(value); return; }
        fail(name, "unknown parameter");
    }
    if (head == "retrial") {
        if (!(value > 0.0)) fail(name, "must be positive");
        if (tail == "rate") { c.retrial = c.retrial.scaled(value / c.retrial.theta()); return; }
        if (tail == "scale") { c.retrial = c.retrial.scaled(value); return; }
        fail(name, "unknown parameter");
    }
    fail(name, "unknown parameter");
}

}  // namespace catq
