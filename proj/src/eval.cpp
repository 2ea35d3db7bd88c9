#include "jamloc/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace jamloc::eval {
namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

void subsets_of_size(std::size_t n, std::size_t k, std::vector<std::vector<std::size_t>>& out) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        out.push_back(idx);
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

struct Job {
    std::size_t subset_size;
    std::size_t run;
    std::vector<std::size_t> subset;
};

}  // namespace

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::mle: return "mle";
        case Method::mean: return "mean";
        case Method::ls: return "ls";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    if (name == "mle") return Method::mle;
    if (name == "mean") return Method::mean;
    if (name == "ls") return Method::ls;
    throw InvalidInput("unknown method '" + std::string(name) + "' (expected mle, mean or ls)");
}

void SweepSpec::validate() const {
    base.validate();
    if (subset_min < 1 || subset_min > base.receiver_count) {
        throw InvalidInput("subset size must be between 1 and the receiver count");
    }
    if (trials < 1) throw InvalidInput("trials must be >= 1");
    if (methods.empty()) throw InvalidInput("no methods selected");
    if (alpha.random && alpha.choices.empty()) throw InvalidInput("random alpha needs choices");
    if (known_alpha && alpha.random) throw InvalidInput("known alpha requires a fixed alpha policy");
    detection.validate();
    mle.validate();
}

const Cell& SweepResult::cell(Method m, std::size_t subset_size) const {
    for (const auto& c : cells) {
        if (c.method == m && c.subset_size == subset_size) return c;
    }
    throw InvalidInput("no such sweep cell");
}

std::vector<std::vector<std::size_t>> enumerate_subsets(std::size_t n, std::size_t k_min) {
    if (k_min > n) throw InvalidInput("k_min exceeds n");
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t k = std::max<std::size_t>(k_min, 1); k <= n; ++k) subsets_of_size(n, k, out);
    return out;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw InvalidInput("quantile of an empty list");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ErrorStats error_stats(std::vector<double> errors) {
    if (errors.empty()) throw InvalidInput("error statistics need at least one value");
    std::sort(errors.begin(), errors.end());
    return {quantile_sorted(errors, 0.5), quantile_sorted(errors, 0.25), quantile_sorted(errors, 0.75)};
}

std::vector<Cell> aggregate(const std::vector<RunRecord>& runs, const std::vector<Method>& methods) {
    std::map<std::pair<std::size_t, std::size_t>, std::vector<const RunRecord*>> groups;
    auto method_rank = [&](Method m) {
        return static_cast<std::size_t>(std::find(methods.begin(), methods.end(), m) - methods.begin());
    };
    for (const auto& r : runs) groups[{method_rank(r.method), r.subset_size}].push_back(&r);

    std::vector<Cell> cells;
    for (const auto& [key, members] : groups) {
        Cell c;
        c.method = methods.at(key.first);
        c.subset_size = key.second;
        c.runs = members.size();
        std::vector<double> errors;
        for (const RunRecord* r : members) {
            if (r->converged) {
                errors.push_back(r->error_3d_m);
            } else {
                ++c.failures[r->failure];
            }
        }
        c.converged = errors.size();
        c.convergence_rate = c.runs > 0 ? static_cast<double>(c.converged) / static_cast<double>(c.runs) : 0.0;
        if (!errors.empty()) c.stats = error_stats(std::move(errors));
        cells.push_back(std::move(c));
    }
    return cells;
}

SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    const std::size_t n = spec.base.receiver_count;

    std::vector<Job> jobs;
    for (std::size_t k = spec.subset_min; k <= n; ++k) {
        std::vector<std::vector<std::size_t>> subsets;
        subsets_of_size(n, k, subsets);
        const std::size_t runs = std::max(spec.trials, subsets.size());
        for (std::size_t r = 0; r < runs; ++r) jobs.push_back({k, r, subsets[r % subsets.size()]});
    }

    // Eight fixed paths unless tracks are regenerated per run.
    const std::vector<ReceiverTrack> fixed_tracks =
        spec.regenerate_tracks ? std::vector<ReceiverTrack>{} : sim::generate_tracks(spec.base);

    auto run_job = [&](const Job& job) {
        const std::uint64_t run_seed = mix(mix(spec.base.seed, job.subset_size), job.run);
        sim::ScenarioSpec scenario_spec = spec.base;
        sim::Rng alpha_rng(mix(run_seed, 0xA1FA));
        std::vector<ReceiverTruth> truth;
        for (std::size_t i = 0; i < n; ++i) {
            ReceiverTruth t = spec.base.receiver(i);
            if (spec.alpha.random) {
                std::uniform_int_distribution<std::size_t> pick(0, spec.alpha.choices.size() - 1);
                t.alpha = spec.alpha.choices[pick(alpha_rng)];
            } else {
                t.alpha = spec.alpha.fixed;
            }
            truth.push_back(t);
        }
        scenario_spec.receivers = truth;

        Scenario scenario;
        scenario.jammer_position = scenario_spec.jammer_position;
        scenario.jam_start_time = scenario_spec.startup_duration_s;
        scenario.sample_rate_hz = scenario_spec.sample_rate_hz;
        if (spec.regenerate_tracks) {
            scenario_spec.seed = mix(run_seed, 0x7AC5);
            scenario.tracks = sim::generate_tracks(scenario_spec);
        } else {
            scenario.tracks = fixed_tracks;
        }
        for (std::size_t i = 0; i < n; ++i) {
            ReceiverTruth t = truth[i];
            if (scenario_spec.excess_at_closest_db) {
                t.eta = sim::calibrate_eta_for_excess(
                    *scenario_spec.excess_at_closest_db,
                    std::max(sim::closest_approach(scenario.tracks[i], scenario.jammer_position), 1.0), t.alpha);
            }
            scenario.truth.push_back(t);
        }
        std::vector<ReceiverTrack> tracks;
        std::vector<CnirSeries> series;
        std::vector<ReceiverTruth> sub_truth;
        {
            auto all_series = sim::synthesize_all(scenario, mix(run_seed, 0x5EED),
                                                  sim::SynthOptions{scenario_spec.saturation_floor_dbhz});
            for (std::size_t i : job.subset) {
                tracks.push_back(scenario.tracks[i]);
                series.push_back(std::move(all_series[i]));
                sub_truth.push_back(scenario.truth[i]);
            }
        }
        const detect::Observations obs = detect::observe(std::move(tracks), std::move(series), spec.detection);

        std::vector<RunRecord> out;
        for (Method m : spec.methods) {
            RunRecord rec;
            rec.method = m;
            rec.subset_size = job.subset_size;
            rec.run = job.run;
            rec.subset = job.subset;
            try {
                Position p;
                switch (m) {
                    case Method::mle: {
                        mle::MleConfig cfg = spec.mle;
                        cfg.seed = mix(run_seed, 0x3113);
                        if (spec.known_alpha) cfg.known_alpha = spec.alpha.fixed;
                        const mle::EstimateReport report = mle::estimate(obs, cfg);
                        p = report.p0_hat;
                        rec.converged = report.converged;
                        rec.failure = report.failure;
                        break;
                    }
                    case Method::mean:
                        p = baselines::mean_position_estimate(obs.tracks, obs.masks, spec.mean_weighting);
                        rec.converged = true;
                        rec.failure = "none";
                        break;
                    case Method::ls: {
                        std::vector<baselines::LsCalibration> cal;
                        for (const auto& t : sub_truth) {
                            if (!(t.eta > 0.0)) throw EstimationImpossible("no jammer to calibrate against");
                            cal.push_back(baselines::calibration_from_truth(t, spec.ls_calibration_distance));
                        }
                        p = baselines::ls_estimate(obs, cal);
                        rec.converged = true;
                        rec.failure = "none";
                        break;
                    }
                }
                const Position e = p - scenario.jammer_position;
                rec.error_3d_m = std::sqrt(e.x * e.x + e.y * e.y + e.z * e.z);
                rec.error_horizontal_m = std::hypot(e.x, e.y);
            } catch (const EstimationImpossible&) {
                rec.converged = false;
                rec.failure = "estimation_impossible";
            }
            out.push_back(std::move(rec));
        }
        return out;
    };

    std::vector<std::vector<RunRecord>> per_job(jobs.size());
    const unsigned threads = std::max(1u, std::min<unsigned>(spec.threads, static_cast<unsigned>(jobs.size())));
    if (threads == 1) {
        for (std::size_t j = 0; j < jobs.size(); ++j) per_job[j] = run_job(jobs[j]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(threads);
        {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < threads; ++t) {
                pool.emplace_back([&, t] {
                    try {
                        for (std::size_t j = next++; j < jobs.size(); j = next++) per_job[j] = run_job(jobs[j]);
                    } catch (...) {
                        errors[t] = std::current_exception();
                        next = jobs.size();
                    }
                });
            }
        }
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    SweepResult result;
    for (auto& v : per_job) {
        for (auto& r : v) result.runs.push_back(std::move(r));
    }
    result.cells = aggregate(result.runs, spec.methods);
    return result;
}

}  // namespace jamloc::eval
