// Small scenario builders shared by the unit tests.
#pragma once

#include <vector>

#include "jamloc/core.hpp"
#include "jamloc/detect.hpp"
#include "jamloc/sim.hpp"

namespace jamloc::testing {

/// Eight fixed straight segments around a jammer at (2000, 2000, 0).
inline sim::ScenarioSpec eight_segment_spec(double sigma = 0.0, double alpha = 2.0) {
    sim::ScenarioSpec spec;
    spec.receivers = {ReceiverTruth{alpha, 0.0, sigma, 45.0}};
    // Each segment passes the jammer at 60-300 m.
    spec.segments = {
        {{595.2, 1691.1, 0.0}, 0.3, 0.0},   {{2828.7, 1201.4, 0.0}, 2.2, 0.0},
        {{888.7, 2795.5, 0.0}, -0.4, 0.0},  {{2436.2, 3524.2, 0.0}, -1.9, 0.0},
        {{1320.1, 941.1, 0.0}, 1.2, 0.0},   {{3336.5, 2660.8, 0.0}, 3.5, 0.0},
        {{928.1, 2167.9, 0.0}, -0.1, 0.0},  {{2139.0, 611.9, 0.0}, 1.8, 0.0},
    };
    return spec;
}

/// Same layout with altitude changes so that no plane holds all samples.
inline sim::ScenarioSpec eight_segment_3d_spec(double sigma = 0.0, double alpha = 2.0) {
    sim::ScenarioSpec spec = eight_segment_spec(sigma, alpha);
    spec.area.hi.z = 300.0;
    const double start_z[8] = {10.0, 250.0, 40.0, 200.0, 5.0, 120.0, 80.0, 290.0};
    const double climb[8] = {0.05, -0.06, 0.03, -0.02, 0.08, 0.0, 0.04, -0.1};
    for (std::size_t i = 0; i < 8; ++i) {
        spec.segments[i].start.z = start_z[i];
        spec.segments[i].climb_rad = climb[i];
    }
    return spec;
}

inline detect::Observations observe(const sim::SimulatedScenario& s, const detect::DetectionConfig& cfg = {}) {
    return detect::observe(s.scenario.tracks, s.series, cfg);
}

}  // namespace jamloc::testing
