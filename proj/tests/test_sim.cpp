#include <doctest.h>

#include <cmath>

#include "jamloc/sim.hpp"
#include "support.hpp"

using namespace jamloc;

TEST_SUITE("sim") {

TEST_CASE("stationary track") {
    sim::ScenarioSpec spec;
    spec.receiver_count = 1;
    spec.speed_mps = 0.0;
    spec.startup_duration_s = 0.0;
    spec.jam_duration_s = 10.0;
    const auto tracks = sim::generate_tracks(spec);
    REQUIRE(tracks.size() == 1);
    REQUIRE(tracks[0].size() == 11);
    for (const auto& s : tracks[0].samples()) CHECK(s.position == tracks[0][0].position);
}

TEST_CASE("constant velocity along +x") {
    sim::ScenarioSpec spec;
    spec.receiver_count = 1;
    spec.speed_mps = 10.0;
    spec.startup_duration_s = 0.0;
    spec.jam_duration_s = 10.0;
    spec.segments = {{{100.0, 100.0, 0.0}, 0.0, 0.0}};
    const auto t = sim::generate_tracks(spec)[0];
    REQUIRE(t.size() == 11);
    CHECK(distance(t[0].position, t[10].position) == doctest::Approx(100.0));
    CHECK(t[10].position.x == doctest::Approx(200.0));
    CHECK(t[10].position.y == doctest::Approx(100.0));
}

TEST_CASE("startup period is stationary") {
    sim::ScenarioSpec spec;
    spec.receiver_count = 2;
    const auto t = sim::generate_tracks(spec)[1];
    CHECK(t.size() == 421);
    CHECK(t[300].position == t[0].position);
    CHECK(distance(t[0].position, t[420].position) == doctest::Approx(spec.speed_mps * 120.0));
}

TEST_CASE("random tracks stay inside the area and are deterministic") {
    sim::ScenarioSpec spec;
    spec.seed = 99;
    const auto a = sim::generate_tracks(spec);
    const auto b = sim::generate_tracks(spec);
    CHECK(a == b);
    for (const auto& t : a) {
        for (const auto& s : t.samples()) {
            CHECK(s.position.x >= -1e-9);
            CHECK(s.position.x <= 4000.0 + 1e-9);
            CHECK(s.position.y >= -1e-9);
            CHECK(s.position.y <= 4000.0 + 1e-9);
            CHECK(s.position.z == 0.0);
        }
    }
    spec.seed = 100;
    CHECK_FALSE(sim::generate_tracks(spec) == a);
}

TEST_CASE("invalid specs") {
    sim::ScenarioSpec spec;
    spec.area = Bounds{{0, 0, 0}, {100, 100, 0}};
    CHECK_THROWS_AS((void)sim::generate_tracks(spec), InvalidInput);
    spec = {};
    spec.segments = {{{3990.0, 10.0, 0.0}, 0.0, 0.0}};
    spec.receiver_count = 1;
    CHECK_THROWS_AS((void)sim::generate_tracks(spec), InvalidInput);
    spec = {};
    spec.receivers = {ReceiverTruth{}, ReceiverTruth{}};
    CHECK_THROWS_AS(spec.validate(), InvalidInput);
}

TEST_CASE("received jamming power examples") {
    CHECK(sim::received_jamming_power_linear(0.0, 123.0, 2.0) == 0.0);
    CHECK(sim::received_jamming_power_linear(100.0, 10.0, 2.0) == doctest::Approx(1.0));
    CHECK(sim::received_jamming_power_linear(9.0, 1.0, 3.7) == doctest::Approx(9.0));
    CHECK_THROWS_AS((void)sim::received_jamming_power_linear(1.0, 0.0, 2.0), InvalidInput);
}

TEST_CASE("calibrate eta examples") {
    CHECK(sim::calibrate_eta_for_excess(0.0, 1.0, 2.0) == doctest::Approx(1.0));
    CHECK(sim::calibrate_eta_for_excess(10.0, 1.0, 2.0) == doctest::Approx(10.0));
    CHECK(sim::calibrate_eta_for_excess(15.0, 100.0, 2.0) == doctest::Approx(std::pow(10.0, 1.5) * 1e4));
    CHECK(sim::calibrate_eta_for_excess(15.0, 100.0, 2.0) == doctest::Approx(3.162e5).epsilon(1e-3));
    CHECK_THROWS_AS((void)sim::calibrate_eta_for_excess(15.0, 0.0, 2.0), InvalidInput);
}

TEST_CASE("noiseless cnir examples") {
    CHECK(sim::noiseless_cnir(45.0, 0.0, 50.0, 2.0) == 45.0);
    // eta d^-alpha = 9
    CHECK(sim::noiseless_cnir(45.0, 900.0, 10.0, 2.0) == doctest::Approx(35.0));
    CHECK(sim::noiseless_cnir(45.0, 1e6, 1e9, 2.0) == doctest::Approx(45.0).epsilon(1e-12));
}

TEST_CASE("noiseless synthesis invariants") {
    auto spec = testing::eight_segment_spec(0.0);
    const auto a = sim::simulate(spec, 5);
    const auto b = sim::simulate(spec, 6);
    CHECK(a.series == b.series);  // sigma = 0: the noise seed is irrelevant
    for (std::size_t i = 0; i < a.series.size(); ++i) {
        const auto& tr = a.scenario.tracks[i];
        const auto& truth = a.scenario.truth[i];
        for (std::size_t n = 0; n < tr.size(); ++n) {
            const auto& s = a.series[i][n];
            REQUIRE_FALSE(s.saturated());
            CHECK(*s.cnir_dbhz <= truth.s_bar_dbhz);
            if (tr[n].time < a.scenario.jam_start_time) CHECK(*s.cnir_dbhz == truth.s_bar_dbhz);
        }
        // Closer means lower CNIR.
        for (std::size_t n = 300; n < tr.size(); ++n) {
            for (std::size_t m = 300; m < tr.size(); m += 7) {
                const double dn = distance(tr[n].position, a.scenario.jammer_position);
                const double dm = distance(tr[m].position, a.scenario.jammer_position);
                if (dn < dm) CHECK(*a.series[i][n].cnir_dbhz <= *a.series[i][m].cnir_dbhz);
            }
        }
    }
}

TEST_CASE("calibration hits the excess at closest approach") {
    auto spec = testing::eight_segment_spec(0.0, 2.5);
    const auto s = sim::simulate(spec);
    for (std::size_t i = 0; i < s.scenario.tracks.size(); ++i) {
        const double dmin = sim::closest_approach(s.scenario.tracks[i], s.scenario.jammer_position);
        const double jnr = sim::received_jamming_power_linear(s.scenario.truth[i].eta, dmin, 2.5);
        CHECK(10.0 * std::log10(jnr) == doctest::Approx(15.0));
    }
}

TEST_CASE("closest approach of a segment") {
    const ReceiverTrack t(ReceiverId{0}, {{0.0, {-10, 5, 0}}, {1.0, {10, 5, 0}}});
    CHECK(sim::closest_approach(t, {0, 0, 0}) == doctest::Approx(5.0));
    CHECK(sim::closest_approach(t, {20, 5, 0}) == doctest::Approx(10.0));
}

TEST_CASE("saturation below the floor") {
    const ReceiverTrack t(ReceiverId{0}, {{0.0, {1, 0, 0}}, {1.0, {1000, 0, 0}}});
    ReceiverTruth truth{2.0, 1e6, 0.0, 45.0};
    sim::Rng rng(1);
    const auto s = sim::synth_cnir(t, truth, {0, 0, 0}, 0.0, rng);
    CHECK(s[0].saturated());
    CHECK_FALSE(s[1].saturated());
}

TEST_CASE("noise residuals are gaussian") {
    std::vector<TrackSample> samples;
    for (int n = 0; n < 20000; ++n) samples.push_back({double(n), {1000.0 + 0.01 * n, 0, 0}});
    const ReceiverTrack t(ReceiverId{0}, samples);
    const ReceiverTruth truth{2.0, 1e6, 1.5, 45.0};
    sim::Rng rng(4);
    const auto s = sim::synth_cnir(t, truth, {0, 0, 0}, 0.0, rng);
    double sum = 0.0, sq = 0.0;
    const double n = static_cast<double>(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double clean = sim::noiseless_cnir(45.0, 1e6, t[k].position.x, 2.0);
        const double w = *s[k].cnir_dbhz - clean;
        sum += w;
        sq += w * w;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 * 1.5 / std::sqrt(n));
    CHECK(var == doctest::Approx(2.25).epsilon(0.2));
}

TEST_CASE("noise seed changes the series only") {
    auto spec = testing::eight_segment_spec(1.0);
    const auto a = sim::simulate(spec, 1);
    const auto b = sim::simulate(spec, 2);
    CHECK(a.scenario.tracks == b.scenario.tracks);
    CHECK_FALSE(a.series == b.series);
    CHECK(sim::simulate(spec, 1).series == a.series);
    CHECK(sim::synthesize_all(a.scenario, 1, {spec.saturation_floor_dbhz}) == a.series);
}

}
