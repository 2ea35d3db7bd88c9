/**
 * @file core.hpp
 * @brief Shared domain types for jammer localization: positions, receiver
 *        tracks, CNIR series and ground-truth scenarios.
 *
 * All distances are meters in a flat local Cartesian (ENU-style) frame,
 * times are seconds, CNIR values are dB-Hz.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace jamloc {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on the inputs was violated.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// The data cannot support an estimate (no detections, too few receivers,
/// singular geometry, non-physical solution).
class EstimationImpossible : public Error {
public:
    using Error::Error;
};

struct Position {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    [[nodiscard]] bool finite() const noexcept {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }

    friend Position operator+(Position a, Position b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Position operator-(Position a, Position b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Position operator*(double s, Position a) noexcept { return {s * a.x, s * a.y, s * a.z}; }
    friend bool operator==(const Position&, const Position&) = default;
};

/// Euclidean distance.
[[nodiscard]] double distance(const Position& a, const Position& b) noexcept;

/// Strong type for a receiver identifier.
struct ReceiverId {
    std::uint32_t value = 0;
    friend auto operator<=>(const ReceiverId&, const ReceiverId&) = default;
};

struct TrackSample {
    double time = 0.0;
    Position position;
    friend bool operator==(const TrackSample&, const TrackSample&) = default;
};

/// Timestamped, known positions of one moving sensor.
class ReceiverTrack {
public:
    /// Throws InvalidInput unless there are >= 2 samples with strictly
    /// increasing times and finite positions.
    ReceiverTrack(ReceiverId id, std::vector<TrackSample> samples);

    [[nodiscard]] ReceiverId id() const noexcept { return id_; }
    [[nodiscard]] const std::vector<TrackSample>& samples() const noexcept { return samples_; }
    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
    [[nodiscard]] const TrackSample& operator[](std::size_t n) const { return samples_[n]; }

    friend bool operator==(const ReceiverTrack&, const ReceiverTrack&) = default;

private:
    ReceiverId id_;
    std::vector<TrackSample> samples_;
};

/// Per-satellite CNIR values at one epoch, as reported by a receiver.
/// An empty value list means the receiver output nothing (saturated).
struct SatelliteCnirSample {
    double time = 0.0;
    std::vector<double> cnir_dbhz;

    [[nodiscard]] bool saturated() const noexcept { return cnir_dbhz.empty(); }
};

/// One averaged CNIR sample S_i[n]; nullopt marks a SATURATED slot.
struct CnirSample {
    double time = 0.0;
    std::optional<double> cnir_dbhz;

    [[nodiscard]] bool saturated() const noexcept { return !cnir_dbhz.has_value(); }
    friend bool operator==(const CnirSample&, const CnirSample&) = default;
};

/// Averaged CNIR measurements of one receiver.
class CnirSeries {
public:
    /// Unaligned series (e.g. from a log before positions are attached).
    CnirSeries(ReceiverId id, std::vector<CnirSample> samples);
    /// Series that must be time-aligned one-to-one with @p track.
    CnirSeries(const ReceiverTrack& track, std::vector<CnirSample> samples);

    [[nodiscard]] ReceiverId id() const noexcept { return id_; }
    [[nodiscard]] const std::vector<CnirSample>& samples() const noexcept { return samples_; }
    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
    [[nodiscard]] const CnirSample& operator[](std::size_t n) const { return samples_[n]; }

    /// True when lengths and timestamps match exactly.
    [[nodiscard]] bool aligned_with(const ReceiverTrack& track) const noexcept;

    friend bool operator==(const CnirSeries&, const CnirSeries&) = default;

private:
    ReceiverId id_;
    std::vector<CnirSample> samples_;
};

/// Jam-free mean CNIR of a receiver (S-bar).
struct Baseline {
    ReceiverId receiver;
    double s_bar_dbhz = 0.0;
};

/// Ground-truth propagation parameters of one receiver.
struct ReceiverTruth {
    double alpha = 2.0;      ///< pathloss exponent, >= 1
    double eta = 0.0;        ///< J0*kappa/N_S, linear, >= 0
    double sigma_db = 1.0;   ///< measurement noise std, > 0 (0 allowed for noiseless runs)
    double s_bar_dbhz = 45.0;
};

struct Scenario {
    Position jammer_position;
    std::vector<ReceiverTrack> tracks;
    std::vector<ReceiverTruth> truth;  ///< parallel to tracks
    double jam_start_time = 0.0;
    double sample_rate_hz = 1.0;

    /// Validates the parameter invariants; throws InvalidInput.
    void validate() const;
};

/// Axis-aligned bounds of a set of positions.
struct Bounds {
    Position lo{+INFINITY, +INFINITY, +INFINITY};
    Position hi{-INFINITY, -INFINITY, -INFINITY};

    void extend(const Position& p) noexcept;
    [[nodiscard]] bool empty() const noexcept { return lo.x > hi.x; }
    [[nodiscard]] Position center() const noexcept { return 0.5 * (lo + hi); }
    /// Half of the 3D diagonal.
    [[nodiscard]] double radius() const noexcept;
};

[[nodiscard]] Bounds track_bounds(const std::vector<ReceiverTrack>& tracks);

}  // namespace jamloc
