#pragma once

#include <json.hpp>

#include <string>

#include "catq/config.hpp"

namespace catq::test {

using nlohmann::json;

inline json scalar(double v) { return json::array({json::array({v})}); }

// One-phase model: every process is Poisson or exponential.
struct ExpParams {
    int S = 1, K = 1, K1 = 0, K2 = 0, M = 1;
    double lh = 0.3, ln = 0.4;             // normal arrivals
    double lhc = 0.2, lnc = 0.2, le = 0.3;  // catastrophic arrivals
    double cat = 0.1;
    double mh = 1.0, mn = 0.8, me = 1.2, rep = 0.5;
    double theta = 2.0, p_ab = 0.1;
};

inline json exp_json(const ExpParams& p) {
    json j;
    j["S"] = p.S;
    j["K"] = p.K;
    j["K1"] = p.K1;
    j["K2"] = p.K2;
    j["M"] = p.M;
    j["arrivals_normal"] = {{"C0", scalar(-(p.lh + p.ln))}, {"H", scalar(p.lh)}, {"N", scalar(p.ln)}};
    j["arrivals_catastrophic"] = {{"C0", scalar(-(p.lhc + p.lnc + p.le))},
                                  {"H", scalar(p.lhc)},
                                  {"N", scalar(p.lnc)},
                                  {"E", scalar(p.le)}};
    j["catastrophe"] = {{"rate", p.cat}};
    j["service_h"] = {{"rate", p.mh}};
    j["service_n"] = {{"rate", p.mn}};
    j["service_e"] = {{"rate", p.me}};
    j["repair"] = {{"rate", p.rep}};
    j["retrial"] = {{"rate", p.theta}, {"abandon_fraction", p.p_ab}};
    return j;
}

inline ModelConfig exp_config(const ExpParams& p) { return parse_config(exp_json(p).dump()); }

// Two-phase services, arrivals and repair on a small cell.
inline json ph_json(int S, int K, int K1, int K2, int M, int retrial_phases) {
    json j;
    j["S"] = S;
    j["K"] = K;
    j["K1"] = K1;
    j["K2"] = K2;
    j["M"] = M;
    j["arrivals_normal"] = {{"C0", {{-1.1, 0.2}, {0.1, -0.45}}},
                            {"H", {{0.3, 0.1}, {0.05, 0.1}}},
                            {"N", {{0.4, 0.1}, {0.1, 0.1}}}};
    j["arrivals_catastrophic"] = {{"C0", {{-1.0, 0.1}, {0.2, -0.7}}},
                                  {"H", {{0.2, 0.0}, {0.1, 0.1}}},
                                  {"N", {{0.2, 0.1}, {0.0, 0.1}}},
                                  {"E", {{0.3, 0.1}, {0.1, 0.1}}}};
    j["catastrophe"] = {{"D0", {{-0.12, 0.1}, {0.2, -0.25}}}, {"D1", {{0.02, 0.0}, {0.0, 0.05}}}};
    j["service_h"] = {{"beta", {0.3, 0.7}}, {"A", {{-1.5, 0.5}, {0.2, -0.9}}}};
    j["service_n"] = {{"beta", {0.6, 0.4}}, {"A", {{-0.8, 0.3}, {0.0, -1.3}}}};
    j["service_e"] = {{"beta", {0.5, 0.5}}, {"A", {{-2.0, 1.0}, {0.5, -1.5}}}};
    j["repair"] = {{"beta", {0.4, 0.6}}, {"A", {{-0.7, 0.2}, {0.1, -0.6}}}};
    if (retrial_phases == 1)
        j["retrial"] = {{"rate", 1.7}, {"abandon_fraction", 0.2}};
    else
        j["retrial"] = {{"gamma", {0.8, 0.2}},
                        {"Gamma", {{-2.0, 1.0}, {0.5, -1.5}}},
                        {"exit_abandon", {0.3, 0.2}},
                        {"exit_retry", {0.7, 0.8}}};
    return j;
}

inline ModelConfig ph_config(int S, int K, int K1, int K2, int M, int retrial_phases) {
    return parse_config(ph_json(S, K, K1, K2, M, retrial_phases).dump());
}

inline std::string source_path(const std::string& rel) { return std::string(CATQ_SOURCE_DIR) + "/" + rel; }

}  // namespace catq::test
