#include "jamloc/detect.hpp"

#include <algorithm>
#include <string>

namespace jamloc::detect {

void DetectionConfig::validate() const {
    if (!(gamma_db < 0.0)) throw InvalidInput("gamma must be negative");
    if (!(baseline_window_s > 0.0)) throw InvalidInput("baseline window must be positive");
    if (smoothing_window == 0 || smoothing_window % 2 == 0) {
        throw InvalidInput("smoothing window must be odd and >= 1");
    }
}

bool DetectionMask::any_detected() const noexcept {
    return std::find(detected.begin(), detected.end(), true) != detected.end();
}

std::size_t DetectionMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(detected.begin(), detected.end(), true));
}

double DetectionMask::detected_fraction() const noexcept {
    return detected.empty() ? 0.0 : static_cast<double>(count()) / static_cast<double>(detected.size());
}

Baseline estimate_baseline(const CnirSeries& series, double window_s) {
    if (!(window_s > 0.0)) throw InvalidInput("baseline window must be positive");
    double sum = 0.0;
    std::size_t n = 0;
    if (series.size() > 0) {
        const double end = series[0].time + window_s;
        for (const auto& s : series.samples()) {
            if (s.time >= end) break;
            if (s.cnir_dbhz) {
                sum += *s.cnir_dbhz;
                ++n;
            }
        }
    }
    if (n < kMinBaselineSamples) {
        throw InvalidInput("receiver " + std::to_string(series.id().value) + ": baseline window holds " +
                           std::to_string(n) + " usable samples, need " +
                           std::to_string(kMinBaselineSamples));
    }
    return {series.id(), sum / static_cast<double>(n)};
}

DetectionMask detect(const CnirSeries& series, const Baseline& baseline, const DetectionConfig& config) {
    config.validate();
    DetectionMask mask{series.id(), std::vector<bool>(series.size(), false)};
    const auto half = static_cast<std::ptrdiff_t>(config.smoothing_window / 2);
    const auto size = static_cast<std::ptrdiff_t>(series.size());
    for (std::ptrdiff_t n = 0; n < size; ++n) {
        const auto& s = series[static_cast<std::size_t>(n)];
        if (s.saturated()) {
            mask.detected[static_cast<std::size_t>(n)] = true;
            continue;
        }
        double drop = *s.cnir_dbhz - baseline.s_bar_dbhz;
        if (half > 0) {
            double sum = 0.0;
            int used = 0;
            for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(0, n - half);
                 k <= std::min(size - 1, n + half); ++k) {
                const auto& v = series[static_cast<std::size_t>(k)].cnir_dbhz;
                if (v) {
                    sum += *v - baseline.s_bar_dbhz;
                    ++used;
                }
            }
            drop = sum / used;
        }
        mask.detected[static_cast<std::size_t>(n)] = drop < config.gamma_db;
    }
    return mask;
}

}  // namespace jamloc::detect

namespace jamloc::detect {

bool Observations::any_detected() const noexcept {
    return std::any_of(masks.begin(), masks.end(), [](const DetectionMask& m) { return m.any_detected(); });
}

Observations Observations::subset(const std::vector<std::size_t>& indices) const {
    Observations out;
    for (std::size_t i : indices) {
        out.tracks.push_back(tracks.at(i));
        out.series.push_back(series.at(i));
        out.baselines.push_back(baselines.at(i));
        out.masks.push_back(masks.at(i));
    }
    return out;
}

Observations observe(std::vector<ReceiverTrack> tracks, std::vector<CnirSeries> series,
                     const DetectionConfig& config) {
    config.validate();
    if (tracks.size() != series.size()) throw InvalidInput("track/series count mismatch");
    Observations obs;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        if (tracks[i].id() != series[i].id() || !series[i].aligned_with(tracks[i])) {
            throw InvalidInput("receiver " + std::to_string(tracks[i].id().value) +
                               ": series not aligned with track");
        }
        obs.baselines.push_back(estimate_baseline(series[i], config.baseline_window_s));
        obs.masks.push_back(detect(series[i], obs.baselines.back(), config));
    }
    obs.tracks = std::move(tracks);
    obs.series = std::move(series);
    return obs;
}

}  // namespace jamloc::detect
