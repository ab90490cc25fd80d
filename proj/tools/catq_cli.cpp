// Command-line front end. JSON goes to stdout, CSV to --out, a short
// human-readable summary to stderr.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "catq/backup_design.hpp"
#include "catq/config.hpp"
#include "catq/errors.hpp"
#include "catq/ergodicity.hpp"
#include "catq/generator.hpp"
#include "catq/layout.hpp"
#include "catq/measures.hpp"
#include "catq/simulation.hpp"
#include "catq/solver.hpp"

using namespace catq;
using ojson = nlohmann::ordered_json;

namespace {

ModelConfig load_valid(const std::string& path) {
    ModelConfig cfg = load_config(path);
    ValidationReport vr = validate_config(cfg);
    if (!vr.ok()) throw ConfigError(vr.summary());
    return cfg;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
}

std::vector<double> parse_values(const std::string& spec, int points) {
    std::vector<double> v;
    auto range = spec.find("..");
    if (range != std::string::npos) {
        double a = std::stod(spec.substr(0, range)), b = std::stod(spec.substr(range + 2));
        if (points < 2) throw ConfigError("--points must be >= 2 for a range");
        for (int k = 0; k < points; ++k) v.push_back(a + (b - a) * k / (points - 1));
        return v;
    }
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) v.push_back(std::stod(item));
    if (v.empty()) throw ConfigError("--values is empty");
    return v;
}

std::string csv_header(const std::string& first) {
    std::string h = first;
    for (const auto& kv : report_scalars(PerformanceReport{})) h += "," + kv.first;
    return h + "\n";
}

std::string csv_row(const std::string& first, const PerformanceReport& r) {
    std::ostringstream os;
    os << std::setprecision(17) << first;
    for (const auto& kv : report_scalars(r)) os << ',' << kv.second;
    os << '\n';
    return os.str();
}

std::string distribution_csv(const ModelConfig& cfg, const StationaryDistribution& d) {
    std::ostringstream os;
    os << std::setprecision(17) << "level,k1,k2,j,i,probability\n";
    for (int l = 0; l < d.levels(); ++l) {
        LevelLayout lay = level_layout(cfg, l);
        for (const Cell& c : lay.cells)
            os << l << ',' << c.s.k1 << ',' << c.s.k2 << ',' << c.s.j << ',' << c.s.i << ','
               << d.z[l].segment(c.offset, c.dim).sum() << '\n';
    }
    return os.str();
}

void dump_blocks(const ModelConfig& cfg, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (int l = 0; l <= cfg.M + 1; ++l) {
        LevelBlocks b = assemble_level(cfg, l);
        auto put = [&](const std::string& name, const SpMat& m) {
            std::ofstream out(dir + "/" + name + "_" + std::to_string(l) + ".mtx");
            write_matrix_market(out, m);
        };
        put("diag", b.diag);
        put("upper", b.upper);
        if (l > 0) {
            put("lower", b.lower);
            put("first_col", b.first_col);
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stationary analysis of a cellular cell with retrials, catastrophes and backup channels"};
    app.require_subcommand(1);
    std::string config_path, out_path;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "model configuration (JSON)")->required();
        sub->add_option("--out", out_path, "write CSV here");
    };

    auto* c_validate = app.add_subcommand("validate", "check a configuration");
    add_common(c_validate);
    auto* c_stability = app.add_subcommand("stability", "ergodicity verdict");
    add_common(c_stability);
    auto* c_solve = app.add_subcommand("solve", "stationary distribution");
    add_common(c_solve);
    std::string dump_dist, dump_dir;
    c_solve->add_option("--dump-dist", dump_dist, "per-level CSV of stratum probabilities");
    c_solve->add_option("--dump-blocks", dump_dir, "directory for generator blocks (matrix market)");
    auto* c_measures = app.add_subcommand("measures", "performance measures");
    add_common(c_measures);
    auto* c_sweep = app.add_subcommand("sweep", "measures over a parameter grid");
    add_common(c_sweep);
    std::string param, values;
    int points = 12;
    c_sweep->add_option("--param", param, "parameter name, e.g. arrivals_normal.rate_H")->required();
    c_sweep->add_option("--values", values, "a..b or a comma-separated list")->required();
    c_sweep->add_option("--points", points, "grid points for a..b");
    auto* c_sim = app.add_subcommand("simulate", "discrete-event simulation");
    add_common(c_sim);
    SimulationSettings ss;
    c_sim->add_option("--events", ss.events, "number of events");
    c_sim->add_option("--seed", ss.seed, "random seed");
    c_sim->add_option("--batches", ss.batches, "batch count for batch means");
    auto* c_opt = app.add_subcommand("optimize", "NSGA-II design of the backup channels");
    add_common(c_opt);
    long long opt_seed = -1;
    c_opt->add_option("--seed", opt_seed, "override nsga2.seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const int threads = thread_count_from_env();
    try {
        if (*c_validate) {
            ModelConfig cfg = load_config(config_path);
            ValidationReport vr = validate_config(cfg);
            ojson j;
            j["valid"] = vr.ok();
            j["issues"] = vr.issues;
            if (vr.ok()) {
                j["lambda_H"] = class_arrival_rate(cfg.arrivals_normal, kHandoff);
                j["lambda_N"] = class_arrival_rate(cfg.arrivals_normal, kNew);
                j["lambda_E"] = class_arrival_rate(cfg.arrivals_catastrophic, kEmergency);
                j["catastrophe_rate"] = catastrophe_rate(cfg.catastrophe);
                j["arrival_correlation"] = map_correlation_coefficient(cfg.arrivals_normal);
                j["arrival_cv"] = map_variation_coefficient(cfg.arrivals_normal);
            }
            std::cout << j.dump(2) << '\n';
            std::cerr << (vr.ok() ? "config is valid\n" : vr.summary() + "\n");
            return vr.ok() ? 0 : 2;
        }
        ModelConfig cfg = load_valid(config_path);
        if (*c_stability) {
            ErgodicityVerdict v = check_ergodicity(cfg);
            ojson j;
            j["stable"] = v.stable;
            j["orbit_inflow"] = v.lhs;
            j["orbit_outflow"] = v.rhs;
            j["margin"] = v.margin;
            j["event_inflow"] = v.event_lhs;
            j["event_outflow"] = v.event_rhs;
            j["routes_agree"] = v.routes_agree;
            j["lambda_total"] = v.lambda_total;
            std::cout << j.dump(2) << '\n';
            std::cerr << (v.stable ? "stable" : "unstable") << ": orbit inflow " << v.lhs << ", outflow " << v.rhs
                      << '\n';
            return v.stable ? 0 : 3;
        }
        if (*c_solve) {
            if (!dump_dir.empty()) dump_blocks(cfg, dump_dir);
            StationaryDistribution d = solve_stationary(cfg);
            ojson j;
            j["i0"] = d.i0;
            j["levels"] = d.levels();
            j["converged_level"] = d.converged_level;
            j["window_length"] = d.s;
            j["window_extensions"] = d.window_extensions;
            j["tail_mass"] = d.tail_mass;
            j["total_mass"] = d.total_mass();
            ojson lv = ojson::array();
            for (const auto& z : d.z) lv.push_back(z.sum());
            j["level_mass"] = lv;
            std::cout << j.dump(2) << '\n';
            if (!dump_dist.empty()) write_file(dump_dist, distribution_csv(cfg, d));
            std::cerr << "solved: " << d.levels() << " levels, i0 = " << d.i0 << ", tail mass " << d.tail_mass << '\n';
            return 0;
        }
        if (*c_measures) {
            PerformanceReport r = compute_report(cfg, solve_stationary(cfg));
            std::cout << report_to_json(r) << '\n';
            if (!out_path.empty()) write_file(out_path, csv_header("config") + csv_row(config_path, r));
            std::cerr << "E_orbit " << r.e_orbit << ", P_d_n " << r.p_d_n << ", P_e " << r.p_e << ", P_b_c "
                      << r.p_b_c << '\n';
            return 0;
        }
        if (*c_sweep) {
            std::vector<double> vals = parse_values(values, points);
            auto pts = sweep(cfg, param, vals, threads);
            ojson arr = ojson::array();
            std::string csv = csv_header(param);
            int failed = 0;
            for (const auto& p : pts) {
                ojson e;
                e["value"] = p.value;
                e["stable"] = p.stable;
                if (p.stable) {
                    for (const auto& kv : report_scalars(p.report)) e[kv.first] = kv.second;
                    std::ostringstream v;
                    v << std::setprecision(17) << p.value;
                    csv += csv_row(v.str(), p.report);
                } else {
                    e["error"] = p.error;
                    ++failed;
                }
                arr.push_back(e);
            }
            std::cout << ojson{{"param", param}, {"points", arr}}.dump(2) << '\n';
            if (!out_path.empty()) write_file(out_path, csv);
            std::cerr << "sweep of " << param << ": " << pts.size() << " points, " << failed << " failed\n";
            return 0;
        }
        if (*c_sim) {
            SimulationEstimate e = simulate(cfg, ss);
            std::cout << simulation_to_json(e) << '\n';
            if (!out_path.empty()) {
                std::ostringstream os;
                os << std::setprecision(17) << "measure,mean,se,count\n";
                for (const auto& x : e.estimates) os << x.name << ',' << x.mean << ',' << x.se << ',' << x.count << '\n';
                write_file(out_path, os.str());
            }
            std::cerr << "simulated " << e.events << " events over time " << e.sim_time << '\n';
            return 0;
        }
        if (*c_opt) {
            if (!cfg.nsga2) throw ConfigError("optimize: the config has no nsga2 section");
            if (opt_seed >= 0) cfg.nsga2->seed = static_cast<unsigned long long>(opt_seed);
            OptimizationResult r = optimize_backup(cfg, threads);
            for (const auto& line : r.log) std::cerr << line << '\n';
            ojson arr = ojson::array();
            for (const auto& c : r.pareto)
                arr.push_back({{"K", c.K},
                               {"K1", c.K1},
                               {"lambda_E", c.lambda_e},
                               {"mu_E", c.mu_e},
                               {"P_e", c.p_e},
                               {"P_b_c", c.p_b_c},
                               {"P_preempt_emr", c.p_preempt_emr},
                               {"feasible", c.feasible()}});
            std::cout << ojson{{"feasible", r.feasible}, {"evaluations", r.evaluations}, {"pareto", arr}}.dump(2)
                      << '\n';
            if (!out_path.empty()) write_file(out_path, optimization_csv(r));
            if (!r.feasible) std::cerr << "no feasible design found; returning the least-violating set\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const UnstableError& e) {
        std::cerr << "unstable: " << e.what() << '\n';
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
