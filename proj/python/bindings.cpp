#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "catq/backup_design.hpp"
#include "catq/config.hpp"
#include "catq/errors.hpp"
#include "catq/ergodicity.hpp"
#include "catq/measures.hpp"
#include "catq/simulation.hpp"
#include "catq/solver.hpp"

namespace py = pybind11;
using namespace catq;

namespace {

py::dict scalars(const PerformanceReport& r) {
    py::dict d;
    for (const auto& [k, v] : report_scalars(r)) d[py::str(k)] = v;
    d["levels"] = r.levels;
    d["orbit"] = r.orbit;
    return d;
}

py::dict candidate(const BackupCandidate& c) {
    py::dict d;
    d["K"] = c.K;
    d["K1"] = c.K1;
    d["lambda_E"] = c.lambda_e;
    d["mu_E"] = c.mu_e;
    d["P_e"] = c.p_e;
    d["P_b_c"] = c.p_b_c;
    d["P_preempt_emr"] = c.p_preempt_emr;
    d["feasible"] = c.feasible();
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Stationary analysis of a cellular cell with retrials, catastrophes and backup channels";

    auto base = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<UnstableError>(m, "UnstableError", PyExc_RuntimeError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
    (void)base;

    py::class_<ModelConfig>(m, "Config")
        .def_static("load", &load_config, py::arg("path"))
        .def_static("from_json", &parse_config, py::arg("text"))
        .def("to_json", [](const ModelConfig& c) { return config_to_json(c); })
        .def("validate", [](const ModelConfig& c) { return validate_config(c).issues; },
             "list of problems, empty when valid")
        .def("set", [](ModelConfig& c, const std::string& name, double v) { apply_parameter(c, name, v); },
             py::arg("name"), py::arg("value"))
        .def("copy", [](const ModelConfig& c) { return c; })
        .def_readwrite("S", &ModelConfig::S)
        .def_readwrite("K", &ModelConfig::K)
        .def_readwrite("K1", &ModelConfig::K1)
        .def_readwrite("K2", &ModelConfig::K2)
        .def_readwrite("M", &ModelConfig::M)
        .def("__repr__", [](const ModelConfig& c) {
            return "<Config S=" + std::to_string(c.S) + " K=" + std::to_string(c.K) + " K1=" + std::to_string(c.K1) +
                   " K2=" + std::to_string(c.K2) + " M=" + std::to_string(c.M) + ">";
        });

    m.def("stability", [](const ModelConfig& c) {
        ErgodicityVerdict v = check_ergodicity(c);
        py::dict d;
        d["stable"] = v.stable;
        d["orbit_inflow"] = v.lhs;
        d["orbit_outflow"] = v.rhs;
        d["margin"] = v.margin;
        d["routes_agree"] = v.routes_agree;
        return d;
    });

    m.def("solve", [](const ModelConfig& c) {
        StationaryDistribution s;
        {
            py::gil_scoped_release nogil;
            s = solve_stationary(c);
        }
        std::vector<double> mass;
        for (const auto& z : s.z) mass.push_back(z.sum());
        py::dict d;
        d["i0"] = s.i0;
        d["levels"] = s.levels();
        d["window_length"] = s.s;
        d["tail_mass"] = s.tail_mass;
        d["level_mass"] = mass;
        return d;
    });

    m.def("measures", [](const ModelConfig& c) {
        PerformanceReport r;
        {
            py::gil_scoped_release nogil;
            r = compute_report(c, solve_stationary(c));
        }
        return scalars(r);
    });

    m.def(
        "sweep",
        [](const ModelConfig& c, const std::string& param, const std::vector<double>& values, int threads) {
            std::vector<SweepPoint> pts;
            {
                py::gil_scoped_release nogil;
                pts = sweep(c, param, values, threads);
            }
            py::list out;
            for (const auto& p : pts) {
                py::dict d = p.stable ? scalars(p.report) : py::dict();
                d["value"] = p.value;
                d["stable"] = p.stable;
                if (!p.stable) d["error"] = p.error;
                out.append(d);
            }
            return out;
        },
        py::arg("config"), py::arg("param"), py::arg("values"), py::arg("threads") = 1);

    m.def(
        "simulate",
        [](const ModelConfig& c, long long events, unsigned long long seed, int batches) {
            SimulationSettings s;
            s.events = events;
            s.seed = seed;
            s.batches = batches;
            SimulationEstimate e;
            {
                py::gil_scoped_release nogil;
                e = simulate(c, s);
            }
            py::dict d;
            for (const auto& x : e.estimates) d[py::str(x.name)] = py::make_tuple(x.mean, x.se);
            return d;
        },
        py::arg("config"), py::arg("events") = 1'000'000, py::arg("seed") = 1, py::arg("batches") = 32);

    m.def(
        "evaluate_backup",
        [](const ModelConfig& c, int K, int K1, double lambda_e, double mu_e) {
            return candidate(evaluate_backup(c, K, K1, lambda_e, mu_e));
        },
        py::arg("config"), py::arg("K"), py::arg("K1"), py::arg("lambda_E"), py::arg("mu_E"));

    m.def(
        "optimize",
        [](const ModelConfig& c, int threads) {
            OptimizationResult r;
            {
                py::gil_scoped_release nogil;
                r = optimize_backup(c, threads);
            }
            py::list front;
            for (const auto& x : r.pareto) front.append(candidate(x));
            py::dict d;
            d["feasible"] = r.feasible;
            d["evaluations"] = r.evaluations;
            d["pareto"] = front;
            d["log"] = r.log;
            return d;
        },
        py::arg("config"), py::arg("threads") = 1);
}
