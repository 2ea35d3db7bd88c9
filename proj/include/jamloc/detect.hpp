/**
 * @file detect.hpp
 * @brief Jam-free baseline estimation and threshold detection.
 */
#pragma once

#include <vector>

#include "jamloc/core.hpp"

namespace jamloc::detect {

struct DetectionConfig {
    double gamma_db = -3.0;          ///< threshold on S - S_bar, < 0
    double baseline_window_s = 300.0;
    /// Optional centered moving average of S - S_bar before thresholding,
    /// in samples (odd). 1 disables smoothing.
    std::size_t smoothing_window = 1;

    void validate() const;
};

struct DetectionMask {
    ReceiverId receiver;
    std::vector<bool> detected;

    [[nodiscard]] bool any_detected() const noexcept;
    [[nodiscard]] double detected_fraction() const noexcept;
    [[nodiscard]] std::size_t count() const noexcept;
};

inline constexpr std::size_t kMinBaselineSamples = 10;

/// Mean of the non-saturated samples with time < first time + window.
/// Throws InvalidInput with fewer than kMinBaselineSamples samples.
[[nodiscard]] Baseline estimate_baseline(const CnirSeries& series, double window_s);

/// detected[n] = (S[n] - S_bar < gamma) or S[n] is saturated.
[[nodiscard]] DetectionMask detect(const CnirSeries& series, const Baseline& baseline,
                                   const DetectionConfig& config);

}  // namespace jamloc::detect

namespace jamloc::detect {

/// Tracks, series and the derived baselines/masks of a set of receivers,
/// index-aligned.
struct Observations {
    std::vector<ReceiverTrack> tracks;
    std::vector<CnirSeries> series;
    std::vector<Baseline> baselines;
    std::vector<DetectionMask> masks;

    [[nodiscard]] std::size_t size() const noexcept { return tracks.size(); }
    [[nodiscard]] bool any_detected() const noexcept;
    /// Observations restricted to the given indices, in that order.
    [[nodiscard]] Observations subset(const std::vector<std::size_t>& indices) const;
};

/// Baseline + detection for every receiver. Series must be aligned with
/// their tracks.
[[nodiscard]] Observations observe(std::vector<ReceiverTrack> tracks, std::vector<CnirSeries> series,
                                   const DetectionConfig& config);

}  // namespace jamloc::detect
