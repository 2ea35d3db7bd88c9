// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "jamloc/baselines.hpp"
#include "jamloc/eval.hpp"
#include "jamloc/ingest.hpp"
#include "jamloc/io.hpp"
#include "jamloc/mle.hpp"
#include "jamloc/sim.hpp"
#include "support.hpp"

using namespace jamloc;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void run(const char* id, const char* title, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = dt < budget_s;
    const bool ok = o.pass && in_time;
    if (!ok) ++failures;
    std::printf("%s [%s] %s: %s (%.2f s, budget %.0f s%s)\n", ok ? "PASS" : "FAIL", id, title, o.detail.c_str(), dt,
                budget_s, in_time ? "" : ", OVER BUDGET");
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

template <class F>
double golden_section(F f, double a, double b, double rel_tol) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > rel_tol * (std::abs(a) + std::abs(b))) {
        if (f1 > f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

mle::LikelihoodState random_state(const sim::SimulatedScenario& s, const mle::Problem& problem, std::mt19937_64& rng) {
    const Bounds b = problem.bounds();
    std::uniform_real_distribution<double> ux(b.lo.x, b.hi.x), uy(b.lo.y, b.hi.y), uz(-50.0, 50.0);
    std::uniform_real_distribution<double> dle(-1.0, 1.0), us2(0.5, 3.0);
    mle::LikelihoodState st;
    st.p0 = {ux(rng), uy(rng), uz(rng)};
    for (const auto& t : s.scenario.truth) {
        st.log_eta.push_back(std::log(t.eta) + dle(rng));
        st.alpha.push_back(t.alpha);
        st.sigma2.push_back(us2(rng));
    }
    return st;
}

sim::SimulatedScenario random_scenario(std::uint64_t seed) {
    sim::ScenarioSpec spec;
    spec.seed = seed;
    return sim::simulate(spec);
}

Outcome gradient_check() {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    int states = 0;
    for (std::uint64_t sc = 0; sc < 10; ++sc) {
        const auto s = random_scenario(500 + sc);
        const auto problem = mle::Problem::build(testing::observe(s));
        for (int k = 0; k < 10; ++k, ++states) {
            const auto st = random_state(s, problem, rng);
            const auto g = mle::gradient(st, problem);
            std::vector<double> analytic{g.p0[0], g.p0[1], g.p0[2]};
            analytic.insert(analytic.end(), g.log_eta.begin(), g.log_eta.end());
            const double h = 1e-4;
            double num = 0.0, den = 0.0;
            for (std::size_t c = 0; c < analytic.size(); ++c) {
                auto p = st, m = st;
                auto bump = [&](mle::LikelihoodState& x, double d) {
                    if (c == 0) x.p0.x += d;
                    else if (c == 1) x.p0.y += d;
                    else if (c == 2) x.p0.z += d;
                    else x.log_eta[c - 3] += d;
                };
                bump(p, h);
                bump(m, -h);
                const double fd =
                    (mle::negative_log_likelihood(p, problem) - mle::negative_log_likelihood(m, problem)) / (2.0 * h);
                num = std::max(num, std::abs(fd - analytic[c]));
                den = std::max(den, std::abs(analytic[c]));
            }
            worst = std::max(worst, num / den);
        }
    }
    return {worst < 1e-5, fmt("%d states, max ||g - fd||inf / ||g||inf = %.2e (tol 1e-5), kernel %s", states, worst,
                              std::string(kernels::active().name).c_str())};
}

Outcome sigma2_check() {
    std::mt19937_64 rng(77);
    double worst = 0.0;
    int sets = 0;
    for (std::uint64_t sc = 0; sc < 10; ++sc) {
        const auto s = random_scenario(700 + sc);
        const auto problem = mle::Problem::build(testing::observe(s));
        for (int k = 0; k < 10; ++k, ++sets) {
            auto st = random_state(s, problem, rng);
            const std::size_t i = static_cast<std::size_t>(k) % problem.size();
            auto closed = st;
            mle::refresh_sigma2(closed, problem);
            auto f = [&](double log_s2) {
                auto x = st;
                x.sigma2[i] = std::exp(log_s2);
                return mle::negative_log_likelihood(x, problem);
            };
            const double oracle = std::exp(golden_section(f, -20.0, 20.0, 1e-12));
            worst = std::max(worst, std::abs(closed.sigma2[i] - oracle) / oracle);
        }
    }
    return {worst < 1e-6, fmt("%d residual sets, max relative difference %.2e (tol 1e-6)", sets, worst)};
}

Outcome noiseless_check() {
    const auto s = sim::simulate(testing::eight_segment_3d_spec(0.0), 1);
    const auto obs = testing::observe(s);
    mle::MleConfig cfg;
    cfg.known_alpha = 2.0;
    const auto r = mle::estimate(obs, cfg);
    const double mle_err = distance(r.p0_hat, s.scenario.jammer_position);
    std::vector<baselines::LsCalibration> cal;
    for (const auto& t : s.scenario.truth) cal.push_back(baselines::calibration_from_truth(t));
    const double ls_err = distance(baselines::ls_estimate(obs, cal), s.scenario.jammer_position);
    return {r.converged && mle_err < 1.0 && ls_err < 1e-6,
            fmt("MLE error %.3e m (tol 1), LS error %.3e m (tol 1e-6)", mle_err, ls_err)};
}

struct Pooled {
    std::size_t runs = 0;
    std::size_t converged = 0;
    std::vector<double> errors;
};

Pooled pool(const eval::SweepResult& r, eval::Method m, std::size_t min_k) {
    Pooled p;
    for (const auto& rec : r.runs) {
        if (rec.method != m || rec.subset_size < min_k) continue;
        ++p.runs;
        if (rec.converged) {
            ++p.converged;
            p.errors.push_back(rec.error_3d_m);
        }
    }
    return p;
}

double pooled_median(const Pooled& p) { return p.errors.empty() ? INFINITY : eval::error_stats(p.errors).median; }

eval::SweepSpec reference_sweep() {
    eval::SweepSpec spec;  // 8 tracks, 4 km box, sigma 1 dB, 15 dB excess at closest approach
    spec.subset_min = 4;
    spec.trials = 50;
    return spec;
}

Outcome monte_carlo_check() {
    const auto r = eval::run_sweep(reference_sweep());
    const double mle = pooled_median(pool(r, eval::Method::mle, 6));
    const double mean = pooled_median(pool(r, eval::Method::mean, 6));
    const double ls = pooled_median(pool(r, eval::Method::ls, 6));
    const double m4 = r.cell(eval::Method::mle, 4).stats->median;
    const double m8 = r.cell(eval::Method::mle, 8).stats->median;
    const bool ok = mle <= 150.0 && mean >= 3.0 * mle && ls >= 2.0 * mle && m8 <= m4 + 25.0;
    return {ok, fmt("k>=6 medians: MLE %.1f m (<= 150), mean %.1f m (%.1fx, >= 3x), LS %.1f m (%.1fx, >= 2x); "
                    "MLE k=8 %.1f m vs k=4 %.1f m + 25",
                    mle, mean, mean / mle, ls, ls / mle, m8, m4)};
}

Outcome alpha_grid_check() {
    auto spec = testing::eight_segment_spec(0.0);
    const double gen[3] = {2.0, 2.5, 2.9338};
    const double expect[3] = {2.0, 2.5, 2.95};
    spec.receivers.clear();
    for (int i = 0; i < 8; ++i) spec.receivers.push_back(ReceiverTruth{gen[i % 3], 0.0, 0.0, 45.0});
    const auto s = sim::simulate(spec, 1);
    const auto problem = mle::Problem::build(testing::observe(s));
    const auto fits = mle::alpha_grid_search(problem, s.scenario.jammer_position, mle::MleConfig{});
    int exact = 0;
    std::string got;
    for (int i = 0; i < 8; ++i) {
        if (std::abs(fits[i].alpha_hat - expect[i % 3]) < 1e-9) ++exact;
        got += fmt("%s%.2f", i ? "," : "", fits[i].alpha_hat);
    }
    return {exact == 8, fmt("%d/8 receivers on the expected grid point; alpha_hat = {%s}", exact, got.c_str())};
}

Outcome mixed_alpha_check() {
    auto spec = reference_sweep();
    spec.alpha.random = true;
    const auto r = eval::run_sweep(spec);
    const auto ls = pool(r, eval::Method::ls, 0);
    const auto mle = pool(r, eval::Method::mle, 0);
    const double ls_fail = 1.0 - double(ls.converged) / double(ls.runs);
    const double mle_conv = double(mle.converged) / double(mle.runs);
    return {ls_fail >= 0.5 && mle_conv >= 0.3,
            fmt("LS failure rate %.3f (>= 0.5), MLE convergence rate %.3f (>= 0.3) over %zu runs", ls_fail, mle_conv,
                ls.runs)};
}

Outcome false_alarm_check() {
    const std::size_t n = 1000000;
    std::vector<TrackSample> samples(n);
    for (std::size_t k = 0; k < n; ++k) samples[k].time = double(k);
    const ReceiverTrack track(ReceiverId{0}, std::move(samples));
    sim::Rng rng(123);
    const auto series = sim::synth_cnir(track, ReceiverTruth{2.0, 0.0, 1.0, 45.0}, {}, 0.0, rng);
    detect::DetectionConfig cfg;
    cfg.gamma_db = -3.0;
    const auto mask = detect::detect(series, Baseline{ReceiverId{0}, 45.0}, cfg);
    const double rate = mask.detected_fraction();
    const double p = 0.5 * std::erfc(3.0 / std::numbers::sqrt2);
    const double se = std::sqrt(p * (1.0 - p) / double(n));
    return {std::abs(rate - p) <= 3.0 * se,
            fmt("empirical %.6f vs Phi(-3) = %.6f, |diff| = %.2f SE (<= 3)", rate, p, std::abs(rate - p) / se)};
}

Outcome determinism_check() {
    eval::SweepSpec spec;
    spec.subset_min = 8;
    spec.trials = 1;
    spec.mle.multistart_count = 2;
    auto render = [&] {
        const auto r = eval::run_sweep(spec);
        std::ostringstream csv;
        io::write_sweep_csv(csv, r);
        return io::to_json(r).dump(2) + "\n" + csv.str();
    };
    const bool same = render() == render();
    std::map<std::size_t, std::size_t> counts;
    for (const auto& s : eval::enumerate_subsets(8, 4)) ++counts[s.size()];
    const bool combos = counts == std::map<std::size_t, std::size_t>{{4, 70}, {5, 56}, {6, 28}, {7, 8}, {8, 1}};
    return {same && combos, fmt("outputs %s; subset counts %zu/%zu/%zu/%zu/%zu", same ? "byte-identical" : "DIFFER",
                                counts[4], counts[5], counts[6], counts[7], counts[8])};
}

Outcome ingest_check() {
    std::ifstream in(std::string(JAMLOC_TEST_DATA) + "/sample_gnsslogger.txt");
    if (!in) return {false, "bundled log missing"};
    const auto first = ingest::parse_log(in, ingest::LogFormat::gnsslogger);
    bool lossless = true;
    for (auto f : {ingest::LogFormat::gnsslogger, ingest::LogFormat::flat}) {
        std::stringstream buf;
        ingest::write_log(buf, first.records, f);
        lossless = lossless && ingest::parse_log(buf, f).records == first.records;
    }
    bool bounded = true;
    const auto series = ingest::average_satellites(ReceiverId{0}, first.records);
    for (std::size_t n = 0; n < first.records.size(); ++n) {
        const auto& sats = first.records[n].satellites;
        if (sats.empty()) {
            bounded = bounded && series[n].saturated();
            continue;
        }
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& s : sats) {
            lo = std::min(lo, s.cn0_dbhz);
            hi = std::max(hi, s.cn0_dbhz);
        }
        bounded = bounded && *series[n].cnir_dbhz >= lo && *series[n].cnir_dbhz <= hi;
    }
    return {lossless && bounded, fmt("%zu epochs; round trip %s; averages %s", first.records.size(),
                                     lossless ? "lossless" : "LOSSY", bounded ? "within bounds" : "OUT OF BOUNDS")};
}

}  // namespace

int main() {
    std::printf("kernel: %s\n", std::string(kernels::active().name).c_str());
    run("1", "gradient vs finite differences", 10, gradient_check);
    run("2", "sigma2 closed form vs golden section", 5, sigma2_check);
    run("3", "noiseless exact recovery", 30, noiseless_check);
    run("4", "Monte Carlo method ordering", 300, monte_carlo_check);
    run("5", "alpha grid recovery", 10, alpha_grid_check);
    run("6", "mixed pathloss behaviour", 300, mixed_alpha_check);
    run("7", "detection false-alarm rate", 10, false_alarm_check);
    run("8", "determinism and subset counts", 1, determinism_check);
    run("9", "ingestion round trip", 1, ingest_check);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
