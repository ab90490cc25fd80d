#pragma once

#include "catq/config.hpp"

#include <string>
#include <vector>

namespace catq {

struct SimulationSettings {
    long long events = 10'000'000;
    long long warmup = -1;  // < 0 means events / 100
    int batches = 32;
    unsigned long long seed = 1;
};

struct Estimate {
    std::string name;
    double mean = 0.0;
    double se = 0.0;       // batch-means standard error
    double count = 0.0;    // numerator events behind a ratio, 0 for time averages
};

struct SimulationEstimate {
    long long events = 0;
    double sim_time = 0.0;
    int batches = 0;
    std::vector<Estimate> estimates;

    const Estimate& get(const std::string& name) const;
};

// Event-by-event simulation of the model: every call in service, in the orbit
// and every channel under repair carries its own phase.
SimulationEstimate simulate(const ModelConfig& cfg, const SimulationSettings& s);

std::string simulation_to_json(const SimulationEstimate& e, int indent = 2);

}  // namespace catq
