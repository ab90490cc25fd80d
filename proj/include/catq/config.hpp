#pragma once

#include "catq/processes.hpp"

#include <optional>
#include <string>

namespace catq {

struct SolverSettings {
    double delta = 1e-12;   // tail mass used to pick the initial level
    double eps_g = 1e-10;   // agreement of the two G seeds
    double eps_f = 1e-10;   // stop when a level's mass drops below this
    int s_multiplier = 1;   // window length s = multiplier * i0
    int max_level = 20000;  // hard cap on the level window
};

struct Nsga2Settings {
    int population = 40;
    int generations = 60;
    double crossover_prob = 0.9;
    double mutation_prob = -1.0;  // < 0 means 1 / number of genes
    double sbx_eta = 15.0;
    double pm_eta = 20.0;
    unsigned long long seed = 1;
    double lambda_e_min = 0.1, lambda_e_max = 20.0;
    double mu_e_min = 0.1, mu_e_max = 20.0;
    double eps_e = 1e-3, eps_b = 1e-3, eps_p = 1e-3;
};

struct ModelConfig {
    int S = 1;
    int K = 0;
    int K1 = 0;
    int K2 = 0;
    int M = 1;

    MarkedArrivalProcess arrivals_normal;        // marks: handoff, new
    MarkedArrivalProcess arrivals_catastrophic;  // marks: handoff, new, emergency
    CatastropheProcess catastrophe;
    PhaseType service_h;
    PhaseType service_n;
    PhaseType service_e;
    PhaseType repair;
    RetrialProcess retrial;
    double backup_rate_scale = 1.0;

    SolverSettings solver;
    std::optional<Nsga2Settings> nsga2;
};

ValidationReport validate_config(const ModelConfig& cfg);

// Parse the JSON text form; throws ConfigError on schema problems. Does not
// run validate_config.
ModelConfig parse_config(const std::string& text);
ModelConfig load_config(const std::string& path);
std::string config_to_json(const ModelConfig& cfg, int indent = 2);

// Sets one named parameter, e.g. "S", "arrivals_normal.rate_H",
// "service_e.rate", "catastrophe.scale". Throws ConfigError on unknown names.
void apply_parameter(ModelConfig& cfg, const std::string& name, double value);

// Scales class `cls` so that its stationary rate equals `target`.
MarkedArrivalProcess with_class_rate(const MarkedArrivalProcess& m, int cls, double target);
PhaseType with_fundamental_rate(const PhaseType& p, double target);

}  // namespace catq
