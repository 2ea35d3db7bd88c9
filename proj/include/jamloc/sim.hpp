/**
 * @file sim.hpp
 * @brief Synthetic crowdsensing scenarios: straight-line receiver tracks
 *        past a fixed jammer and CNIR synthesized from the log-domain
 *        pathloss measurement model.
 *
 * Timeline of every track: a stationary start-up period (jammer off) of
 * `startup_duration`, then constant-velocity motion along a straight line
 * for `jam_duration` with the jammer on.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "jamloc/core.hpp"

namespace jamloc::sim {

/// Simulation RNG. Each task owns its own instance.
using Rng = std::mt19937_64;

/// A fixed segment for one receiver, overriding the random draw.
struct SegmentSpec {
    Position start;
    double heading_rad = 0.0;  ///< 0 = +x, counter-clockwise
    double climb_rad = 0.0;    ///< elevation angle of the motion
};

struct ScenarioSpec {
    std::size_t receiver_count = 8;
    Bounds area{{0.0, 0.0, 0.0}, {4000.0, 4000.0, 0.0}};
    double speed_mps = 80.0 / 3.6;
    double startup_duration_s = 300.0;
    double jam_duration_s = 120.0;
    double sample_rate_hz = 1.0;
    Position jammer_position{2000.0, 2000.0, 0.0};

    /// Per-receiver parameters; a single entry is broadcast to all receivers.
    std::vector<ReceiverTruth> receivers{ReceiverTruth{}};
    /// When set, eta_i is replaced by calibrate_eta_for_excess at the
    /// receiver's closest approach to the jammer.
    std::optional<double> excess_at_closest_db = 15.0;

    /// Optional explicit segments, one per receiver.
    std::vector<SegmentSpec> segments;

    std::uint64_t seed = 1;
    double saturation_floor_dbhz = 10.0;

    void validate() const;
    [[nodiscard]] ReceiverTruth receiver(std::size_t i) const;
};

/// Straight-line constant-speed tracks that stay inside `spec.area`.
/// Throws InvalidInput when the box cannot hold a segment of the required
/// length.
[[nodiscard]] std::vector<ReceiverTrack> generate_tracks(const ScenarioSpec& spec);

/// J_i / N_S,i = eta * d^-alpha. Throws InvalidInput for d <= 0.
[[nodiscard]] double received_jamming_power_linear(double eta, double d, double alpha);

/// eta such that eta * d_ref^-alpha equals the target excess (dB).
[[nodiscard]] double calibrate_eta_for_excess(double target_excess_db, double d_ref, double alpha);

/// Closest distance of a track to a point.
[[nodiscard]] double closest_approach(const ReceiverTrack& track, const Position& p);

/// Noiseless model value of S at distance d (jammer on).
[[nodiscard]] double noiseless_cnir(double s_bar_dbhz, double eta, double d, double alpha);

struct SynthOptions {
    double saturation_floor_dbhz = 10.0;
};

/// CNIR series for one receiver; `truth` supplies eta, alpha, sigma, s_bar.
[[nodiscard]] CnirSeries synth_cnir(const ReceiverTrack& track, const ReceiverTruth& truth,
                                    const Position& jammer, double jam_start_time, Rng& rng,
                                    const SynthOptions& options = {});

/// Full scenario (tracks + ground truth) and synthesized series.
struct SimulatedScenario {
    Scenario scenario;
    std::vector<CnirSeries> series;
};

/// Tracks from `spec.seed`; measurement noise from `noise_seed` (defaults
/// to a stream derived from `spec.seed`).
[[nodiscard]] SimulatedScenario simulate(const ScenarioSpec& spec,
                                         std::optional<std::uint64_t> noise_seed = std::nullopt);

/// Resynthesize series for an existing scenario with a fresh noise seed.
[[nodiscard]] std::vector<CnirSeries> synthesize_all(const Scenario& scenario, std::uint64_t noise_seed,
                                                     const SynthOptions& options = {});

}  // namespace jamloc::sim
