#include "jamloc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace jamloc::sim {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

bool inside(const Bounds& box, const Position& p) {
    constexpr double tol = 1e-9;
    return p.x >= box.lo.x - tol && p.x <= box.hi.x + tol && p.y >= box.lo.y - tol &&
           p.y <= box.hi.y + tol && p.z >= box.lo.z - tol && p.z <= box.hi.z + tol;
}

Position direction(const SegmentSpec& seg) {
    const double c = std::cos(seg.climb_rad);
    return {c * std::cos(seg.heading_rad), c * std::sin(seg.heading_rad), std::sin(seg.climb_rad)};
}

ReceiverTrack sample_segment(ReceiverId id, const SegmentSpec& seg, const ScenarioSpec& spec) {
    const double total = spec.startup_duration_s + spec.jam_duration_s;
    const auto count = static_cast<std::size_t>(std::floor(total * spec.sample_rate_hz + 1e-9)) + 1;
    const Position dir = direction(seg);
    std::vector<TrackSample> samples;
    samples.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        const double t = static_cast<double>(n) / spec.sample_rate_hz;
        const double moving = std::max(0.0, t - spec.startup_duration_s);
        samples.push_back({t, seg.start + (spec.speed_mps * moving) * dir});
    }
    return ReceiverTrack(id, std::move(samples));
}

}  // namespace

void ScenarioSpec::validate() const {
    if (receiver_count == 0) throw InvalidInput("receiver_count must be >= 1");
    if (area.empty()) throw InvalidInput("area bounding box is empty");
    if (!(speed_mps >= 0.0)) throw InvalidInput("speed must be >= 0");
    if (!(startup_duration_s >= 0.0)) throw InvalidInput("startup duration must be >= 0");
    if (!(jam_duration_s > 0.0)) throw InvalidInput("jam duration must be > 0");
    if (!(sample_rate_hz > 0.0)) throw InvalidInput("sample rate must be > 0");
    if (!jammer_position.finite()) throw InvalidInput("jammer position must be finite");
    if (receivers.empty() || (receivers.size() != 1 && receivers.size() != receiver_count)) {
        throw InvalidInput("receivers must list 1 or receiver_count parameter sets");
    }
    if (!segments.empty() && segments.size() != receiver_count) {
        throw InvalidInput("segments must be empty or list one entry per receiver");
    }
}

ReceiverTruth ScenarioSpec::receiver(std::size_t i) const {
    return receivers.size() == 1 ? receivers.front() : receivers.at(i);
}

std::vector<ReceiverTrack> generate_tracks(const ScenarioSpec& spec) {
    spec.validate();
    const double length = spec.speed_mps * spec.jam_duration_s;
    const Position extent = spec.area.hi - spec.area.lo;
    if (length > distance(spec.area.lo, spec.area.hi)) {
        throw InvalidInput("area too small for a " + std::to_string(length) + " m straight segment");
    }

    std::vector<ReceiverTrack> tracks;
    tracks.reserve(spec.receiver_count);
    Rng rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < spec.receiver_count; ++i) {
        const ReceiverId id{static_cast<std::uint32_t>(i)};
        if (!spec.segments.empty()) {
            const SegmentSpec& seg = spec.segments[i];
            const Position end = seg.start + length * direction(seg);
            if (!inside(spec.area, seg.start) || !inside(spec.area, end)) {
                throw InvalidInput("segment for receiver " + std::to_string(i) + " leaves the area");
            }
            tracks.push_back(sample_segment(id, seg, spec));
            continue;
        }
        const double max_climb = length > 0.0 ? std::asin(std::min(1.0, extent.z / length)) : 0.0;
        bool placed = false;
        for (int attempt = 0; attempt < 100000 && !placed; ++attempt) {
            SegmentSpec seg;
            seg.start = {spec.area.lo.x + unit(rng) * extent.x, spec.area.lo.y + unit(rng) * extent.y,
                         spec.area.lo.z + unit(rng) * extent.z};
            seg.heading_rad = 2.0 * std::numbers::pi * unit(rng);
            seg.climb_rad = max_climb * (2.0 * unit(rng) - 1.0);
            if (inside(spec.area, seg.start + length * direction(seg))) {
                tracks.push_back(sample_segment(id, seg, spec));
                placed = true;
            }
        }
        if (!placed) throw InvalidInput("could not fit a straight segment inside the area");
    }
    return tracks;
}

double received_jamming_power_linear(double eta, double d, double alpha) {
    if (!(d > 0.0)) throw InvalidInput("distance must be positive");
    return eta * std::pow(d, -alpha);
}

double calibrate_eta_for_excess(double target_excess_db, double d_ref, double alpha) {
    if (!(d_ref > 0.0)) throw InvalidInput("reference distance must be positive");
    return std::pow(10.0, target_excess_db / 10.0) * std::pow(d_ref, alpha);
}

double closest_approach(const ReceiverTrack& track, const Position& p) {
    double best = INFINITY;
    const auto& s = track.samples();
    for (std::size_t n = 0; n + 1 < s.size(); ++n) {
        const Position a = s[n].position;
        const Position ab = s[n + 1].position - a;
        const Position ap = p - a;
        const double len2 = ab.x * ab.x + ab.y * ab.y + ab.z * ab.z;
        double t = len2 > 0.0 ? (ap.x * ab.x + ap.y * ab.y + ap.z * ab.z) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        best = std::min(best, distance(a + t * ab, p));
    }
    return best;
}

double noiseless_cnir(double s_bar_dbhz, double eta, double d, double alpha) {
    const double jnr = received_jamming_power_linear(eta, std::max(d, 1.0), alpha);
    return s_bar_dbhz - 10.0 * std::log10(jnr + 1.0);
}

CnirSeries synth_cnir(const ReceiverTrack& track, const ReceiverTruth& truth, const Position& jammer,
                      double jam_start_time, Rng& rng, const SynthOptions& options) {
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<CnirSample> out;
    out.reserve(track.size());
    for (const auto& s : track.samples()) {
        const double w = noise(rng);
        const double eta = s.time < jam_start_time ? 0.0 : truth.eta;
        const double clean = noiseless_cnir(truth.s_bar_dbhz, eta, distance(jammer, s.position), truth.alpha);
        if (clean < options.saturation_floor_dbhz) {
            out.push_back({s.time, std::nullopt});
        } else {
            out.push_back({s.time, clean + truth.sigma_db * w});
        }
    }
    return CnirSeries(track, std::move(out));
}

std::vector<CnirSeries> synthesize_all(const Scenario& scenario, std::uint64_t noise_seed,
                                       const SynthOptions& options) {
    std::vector<CnirSeries> series;
    series.reserve(scenario.tracks.size());
    for (std::size_t i = 0; i < scenario.tracks.size(); ++i) {
        Rng rng(splitmix64(noise_seed ^ splitmix64(scenario.tracks[i].id().value + 1)));
        series.push_back(synth_cnir(scenario.tracks[i], scenario.truth[i], scenario.jammer_position,
                                    scenario.jam_start_time, rng, options));
    }
    return series;
}

SimulatedScenario simulate(const ScenarioSpec& spec, std::optional<std::uint64_t> noise_seed) {
    SimulatedScenario out;
    Scenario& sc = out.scenario;
    sc.jammer_position = spec.jammer_position;
    sc.tracks = generate_tracks(spec);
    sc.jam_start_time = spec.startup_duration_s;
    sc.sample_rate_hz = spec.sample_rate_hz;
    for (std::size_t i = 0; i < sc.tracks.size(); ++i) {
        ReceiverTruth t = spec.receiver(i);
        if (spec.excess_at_closest_db) {
            t.eta = calibrate_eta_for_excess(*spec.excess_at_closest_db,
                                             std::max(closest_approach(sc.tracks[i], sc.jammer_position), 1.0),
                                             t.alpha);
        }
        sc.truth.push_back(t);
    }
    sc.validate();
    out.series = synthesize_all(sc, noise_seed.value_or(splitmix64(spec.seed)),
                                SynthOptions{spec.saturation_floor_dbhz});
    return out;
}

}  // namespace jamloc::sim
