/**
 * @file eval.hpp
 * @brief Monte Carlo sweeps over receiver subsets and error statistics.
 */
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jamloc/baselines.hpp"
#include "jamloc/detect.hpp"
#include "jamloc/mle.hpp"
#include "jamloc/sim.hpp"

namespace jamloc::eval {

enum class Method { mle, mean, ls };

[[nodiscard]] std::string_view to_string(Method m) noexcept;
/// Throws InvalidInput for unknown names.
[[nodiscard]] Method parse_method(std::string_view name);

/// Pathloss assignment per run: one fixed value, or a uniform draw per
/// receiver from `choices`.
struct AlphaPolicy {
    bool random = false;
    double fixed = 2.0;
    std::vector<double> choices{2.0, 2.5, 2.9338};
};

struct SweepSpec {
    sim::ScenarioSpec base;
    std::size_t subset_min = 4;
    std::vector<Method> methods{Method::mle, Method::mean, Method::ls};
    /// Runs per subset size are max(trials, number of subsets of that
    /// size); subsets are visited cyclically and every run draws fresh noise.
    std::size_t trials = 50;
    /// Gives the MLE the true (fixed) alpha and skips selection.
    bool known_alpha = false;
    AlphaPolicy alpha;
    bool regenerate_tracks = false;

    detect::DetectionConfig detection;
    mle::MleConfig mle;
    double ls_calibration_distance = 100.0;
    baselines::MeanWeighting mean_weighting = baselines::MeanWeighting::per_sample;
    unsigned threads = 1;

    void validate() const;
};

struct RunRecord {
    Method method = Method::mle;
    std::size_t subset_size = 0;
    std::size_t run = 0;
    std::vector<std::size_t> subset;
    bool converged = false;
    std::string failure;  ///< "none" when converged
    double error_3d_m = 0.0;
    double error_horizontal_m = 0.0;
};

struct ErrorStats {
    double median = 0.0;
    double p25 = 0.0;
    double p75 = 0.0;
};

struct Cell {
    Method method = Method::mle;
    std::size_t subset_size = 0;
    std::optional<ErrorStats> stats;  ///< over converged runs only
    double convergence_rate = 0.0;
    std::size_t runs = 0;
    std::size_t converged = 0;
    std::map<std::string, std::size_t> failures;
};

struct SweepResult {
    std::vector<Cell> cells;
    std::vector<RunRecord> runs;

    [[nodiscard]] const Cell& cell(Method m, std::size_t subset_size) const;
};

/// All index subsets of size k_min..n, lexicographic within each size.
[[nodiscard]] std::vector<std::vector<std::size_t>> enumerate_subsets(std::size_t n, std::size_t k_min);

/// Median and quartiles with linear interpolation between order
/// statistics. Throws InvalidInput on an empty list.
[[nodiscard]] ErrorStats error_stats(std::vector<double> errors);

/// Quantile q in [0,1], linear interpolation.
[[nodiscard]] double quantile_sorted(const std::vector<double>& sorted, double q);

[[nodiscard]] SweepResult run_sweep(const SweepSpec& spec);

/// Aggregate run records into cells (exposed for tests).
[[nodiscard]] std::vector<Cell> aggregate(const std::vector<RunRecord>& runs, const std::vector<Method>& methods);

}  // namespace jamloc::eval
