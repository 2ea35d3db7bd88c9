/**
 * @file baselines.hpp
 * @brief Comparison estimators: mean position of detecting receivers and
 *        calibrated range-based least squares.
 */
#pragma once

#include <vector>

#include "jamloc/core.hpp"
#include "jamloc/detect.hpp"
#include "jamloc/mle.hpp"

namespace jamloc::baselines {

/// Known jamming-to-noise ratio at a known distance for one receiver;
/// ranges are inverted assuming `alpha`.
struct LsCalibration {
    double ratio_ref = 1.0;
    double d_ref = 100.0;
    double alpha = 2.0;

    void validate() const;
};

/// Inverse of the CNIR model: 10^((S_bar - S)/10) - 1, clipped at 0.
[[nodiscard]] double jnr_from_cnir(double s_dbhz, double s_bar_dbhz) noexcept;

enum class MeanWeighting {
    per_sample,    ///< every detecting (receiver, time) pair counts once
    per_receiver,  ///< each detecting receiver's own mean counts once
};

/// Throws EstimationImpossible when nothing is detected.
[[nodiscard]] Position mean_position_estimate(const std::vector<ReceiverTrack>& tracks,
                                              const std::vector<detect::DetectionMask>& masks,
                                              MeanWeighting weighting = MeanWeighting::per_sample);

/// Range-based linear least-squares multilateration. Throws
/// EstimationImpossible for fewer than 4 receivers with usable ranges,
/// a singular system, or a non-physical solution.
[[nodiscard]] Position ls_estimate(const detect::Observations& obs, const std::vector<LsCalibration>& calibration);

/// Perfect calibration from ground truth: ratio at d_ref from eta and alpha.
[[nodiscard]] LsCalibration calibration_from_truth(const ReceiverTruth& truth, double d_ref = 100.0);

/// Wrap a baseline position in the common report shape.
[[nodiscard]] mle::EstimateReport make_report(std::string method, const Position& p,
                                              const detect::Observations& obs);

}  // namespace jamloc::baselines
