/**
 * @file io.hpp
 * @brief File formats: versioned JSON configuration, scenario directories
 *        (scenario.json + one CSV per receiver), detection masks, estimate
 *        reports and sweep results.
 *
 * Receiver CSV columns: `time_s,x_m,y_m,z_m,cnir_dbhz,saturated`
 * (cnir_dbhz empty when saturated = 1).
 * Sweep CSV columns: `method,subset_size,median_m,p25_m,p75_m,convergence_rate,n_runs`.
 */
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jamloc/baselines.hpp"
#include "jamloc/detect.hpp"
#include "jamloc/eval.hpp"
#include "jamloc/mle.hpp"
#include "jamloc/sim.hpp"

namespace jamloc::io {

inline constexpr int kConfigVersion = 1;

/// Every tunable default of the toolkit in one document.
struct Config {
    sim::ScenarioSpec scenario;
    detect::DetectionConfig detection;
    mle::MleConfig mle;
    double ls_calibration_distance = 100.0;
    baselines::MeanWeighting mean_weighting = baselines::MeanWeighting::per_sample;
    eval::SweepSpec sweep;  ///< base/detection/mle inside are overwritten from the fields above

    [[nodiscard]] eval::SweepSpec sweep_spec() const;
};

[[nodiscard]] nlohmann::json to_json(const Config& c);
/// Missing keys keep their defaults; a version mismatch throws InvalidInput.
[[nodiscard]] Config config_from_json(const nlohmann::json& j);
[[nodiscard]] Config load_config(const std::filesystem::path& path);

[[nodiscard]] nlohmann::json to_json(const sim::ScenarioSpec& s);
[[nodiscard]] sim::ScenarioSpec scenario_spec_from_json(const nlohmann::json& j, sim::ScenarioSpec base = {});

[[nodiscard]] nlohmann::json to_json(const mle::EstimateReport& r);
[[nodiscard]] nlohmann::json to_json(const eval::SweepResult& r);

/// Deterministic number formatting (shortest round-trip representation).
[[nodiscard]] std::string format_number(double v);

void write_receiver_csv(std::ostream& out, const ReceiverTrack& track, const CnirSeries& series);
/// Throws InvalidInput on malformed content.
[[nodiscard]] std::pair<ReceiverTrack, CnirSeries> read_receiver_csv(std::istream& in, ReceiverId id);

struct ScenarioFiles {
    std::vector<ReceiverTrack> tracks;
    std::vector<CnirSeries> series;
    std::optional<Scenario> truth;  ///< present when scenario.json carries ground truth
};

/// Writes scenario.json (spec + truth) and receiver_<id>.csv files.
void write_scenario_dir(const std::filesystem::path& dir, const sim::ScenarioSpec& spec,
                        const sim::SimulatedScenario& sim);
/// Reads receiver_*.csv files (sorted by id) and, if present, scenario.json.
[[nodiscard]] ScenarioFiles read_scenario_dir(const std::filesystem::path& dir);

void write_mask_csv(std::ostream& out, const detect::Observations& obs);
void write_sweep_csv(std::ostream& out, const eval::SweepResult& r);

}  // namespace jamloc::io
