#include "jamloc/core.hpp"

#include <algorithm>
#include <string>

namespace jamloc {

double distance(const Position& a, const Position& b) noexcept {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

ReceiverTrack::ReceiverTrack(ReceiverId id, std::vector<TrackSample> samples)
    : id_(id), samples_(std::move(samples)) {
    if (samples_.size() < 2) {
        throw InvalidInput("receiver " + std::to_string(id_.value) + ": track needs at least 2 samples");
    }
    for (std::size_t n = 0; n < samples_.size(); ++n) {
        if (!std::isfinite(samples_[n].time) || !samples_[n].position.finite()) {
            throw InvalidInput("receiver " + std::to_string(id_.value) + ": non-finite track sample " +
                               std::to_string(n));
        }
        if (n > 0 && !(samples_[n].time > samples_[n - 1].time)) {
            throw InvalidInput("receiver " + std::to_string(id_.value) +
                               ": track times must be strictly increasing");
        }
    }
}

CnirSeries::CnirSeries(ReceiverId id, std::vector<CnirSample> samples)
    : id_(id), samples_(std::move(samples)) {
    for (const auto& s : samples_) {
        if (!std::isfinite(s.time) || (s.cnir_dbhz && !std::isfinite(*s.cnir_dbhz))) {
            throw InvalidInput("receiver " + std::to_string(id_.value) + ": non-finite CNIR sample");
        }
    }
}

CnirSeries::CnirSeries(const ReceiverTrack& track, std::vector<CnirSample> samples)
    : CnirSeries(track.id(), std::move(samples)) {
    if (!aligned_with(track)) {
        throw InvalidInput("receiver " + std::to_string(id_.value) +
                           ": CNIR series is not time-aligned with its track");
    }
}

bool CnirSeries::aligned_with(const ReceiverTrack& track) const noexcept {
    if (samples_.size() != track.size()) return false;
    for (std::size_t n = 0; n < samples_.size(); ++n) {
        if (samples_[n].time != track[n].time) return false;
    }
    return true;
}

void Scenario::validate() const {
    if (!jammer_position.finite()) throw InvalidInput("jammer position must be finite");
    if (truth.size() != tracks.size()) throw InvalidInput("scenario truth/track count mismatch");
    if (!(sample_rate_hz > 0.0)) throw InvalidInput("sample rate must be positive");
    for (const auto& t : truth) {
        if (!(t.alpha >= 1.0)) throw InvalidInput("alpha must be >= 1");
        if (!(t.eta >= 0.0)) throw InvalidInput("eta must be >= 0");
        if (!(t.sigma_db >= 0.0)) throw InvalidInput("sigma must be >= 0");
        if (!std::isfinite(t.s_bar_dbhz)) throw InvalidInput("s_bar must be finite");
    }
}

void Bounds::extend(const Position& p) noexcept {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
}

double Bounds::radius() const noexcept {
    if (empty()) return 0.0;
    return 0.5 * distance(lo, hi);
}

Bounds track_bounds(const std::vector<ReceiverTrack>& tracks) {
    Bounds b;
    for (const auto& t : tracks) {
        for (const auto& s : t.samples()) b.extend(s.position);
    }
    return b;
}

}  // namespace jamloc
