#pragma once

// Shared fixtures for the test suite.

#include <string>
#include <vector>

#include "uqfarm/config.hpp"
#include "uqfarm/simulator.hpp"
#include "uqfarm/types.hpp"

namespace uqfarm::testing {

inline StudySpec make_spec(const std::vector<InputVariable>& vars,
                           const std::vector<std::string>& metrics, std::uint64_t seed = 1) {
    StudySpec spec;
    spec.variables = vars;
    for (const auto& m : metrics) spec.metrics.push_back({m, SummaryKind::PeakAbsSigned});
    spec.seed = seed;
    spec.n_rsm = static_cast<int>(vars.size()) + 2;
    spec.validate();
    return spec;
}

// d generic variables, sigma = 10% of mean.
inline StudySpec generic_spec(int d, int m = 2, std::uint64_t seed = 1) {
    std::vector<InputVariable> vars;
    for (int i = 0; i < d; ++i) {
        double mean = 10.0 + i;
        vars.push_back({"x" + std::to_string(i), mean, 0.1 * mean, ""});
    }
    std::vector<std::string> metrics;
    for (int j = 0; j < m; ++j) metrics.push_back("y" + std::to_string(j));
    return make_spec(vars, metrics, seed);
}

// Spec plus a planted synthetic simulator block (Q=0, keys 0..key_count-1).
inline StudySpec planted_spec(int d, int key_count, int m = 3, std::uint64_t seed = 7,
                              double latency_ms = 0.0) {
    auto spec = generic_spec(d, m, seed);
    std::string keys;
    for (int i = 0; i < key_count; ++i) {
        if (i) keys += ",";
        keys += std::to_string(i);
    }
    spec.simulator_json = "{\"type\":\"synthetic\",\"key_set\":[" + keys +
                          "],\"job_latency_ms\":" + std::to_string(latency_ms) + "}";
    return spec;
}

inline std::string default_config_path() {
    return std::string(UQFARM_CONFIG_DIR) + "/passive_flexion_default.json";
}

} // namespace uqfarm::testing
