/**
 * @file mle.hpp
 * @brief Detection-gated maximum-likelihood jammer localization.
 *
 * Per receiver i with N_i samples the negative log-likelihood is
 *
 *     (N_i/2) log(2 pi sigma2_i) + (1 / (2 sigma2_i)) sum_n X_i[n]^2
 *
 * where X_i[n] is the model residual for detected, non-saturated samples
 * and 0 otherwise. The optimizer works on (p0, log eta_i) with sigma2_i
 * refreshed in closed form after every accepted step; alpha_i is held
 * fixed during descent and chosen per receiver by grid search.
 */
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jamloc/core.hpp"
#include "jamloc/detect.hpp"
#include "jamloc/kernels.hpp"

namespace jamloc::mle {

struct AlphaGrid {
    double min = 1.5;
    double max = 4.0;
    double step = 0.05;

    [[nodiscard]] std::vector<double> values() const;
};

struct MleConfig {
    AlphaGrid alpha_grid;
    double alpha_select_threshold = 2.3;
    /// alpha used for the first descent when alpha is estimated
    double initial_alpha = 2.0;
    /// Fixed alpha for all receivers; skips grid search and selection.
    std::optional<double> known_alpha;

    int max_iterations = 3000;
    /// On ||grad||_inf / sum_i(n_gated_i / sigma2_i), in scaled coordinates.
    double gradient_tolerance = 1e-6;
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;

    int multistart_count = 16;
    int refine_multistart_count = 1;
    std::uint64_t seed = 1;

    double sigma2_floor = 1e-6;
    double bounds_inflation = 10.0;
    double low_information_tolerance = 1e-6;

    void validate() const;
};

/// X for one sample. Saturated samples (nullopt) and samples with
/// S - S_bar >= gamma give 0.
[[nodiscard]] double gated_residual(std::optional<double> s_dbhz, double s_bar_dbhz, double d, double eta,
                                    double alpha, double gamma_db);

/// Gated-in samples of one receiver in kernel layout.
struct ReceiverData {
    ReceiverId id;
    std::vector<double> x, y, z, excess_db;
    std::size_t total_samples = 0;  ///< N_i, gated-out and saturated included
    bool any_detected = false;
    Position detected_sum;          ///< sum of positions at detected samples
    std::size_t detected_count = 0;
    Bounds track_bounds;
    double altitude_sum = 0.0;      ///< over all track samples

    [[nodiscard]] kernels::SampleBlock block() const noexcept { return {x, y, z, excess_db}; }
    [[nodiscard]] std::size_t gated_count() const noexcept { return excess_db.size(); }
};

class Problem {
public:
    /// Gating is taken from the masks: detected and not saturated.
    [[nodiscard]] static Problem build(const detect::Observations& obs);

    [[nodiscard]] const std::vector<ReceiverData>& receivers() const noexcept { return receivers_; }
    [[nodiscard]] std::size_t size() const noexcept { return receivers_.size(); }
    [[nodiscard]] Problem subset(std::span<const std::size_t> indices) const;
    [[nodiscard]] std::size_t gated_count() const noexcept;
    /// Mean position over all detected samples (or all positions when none).
    [[nodiscard]] Position detection_centroid() const noexcept;
    [[nodiscard]] const Bounds& bounds() const noexcept { return bounds_; }
    [[nodiscard]] double mean_altitude() const noexcept { return mean_altitude_; }

private:
    void finish();

    std::vector<ReceiverData> receivers_;
    Bounds bounds_;
    double mean_altitude_ = 0.0;
};

struct LikelihoodState {
    Position p0;
    std::vector<double> log_eta;
    std::vector<double> alpha;
    std::vector<double> sigma2;

    [[nodiscard]] double eta(std::size_t i) const { return std::exp(log_eta.at(i)); }
};

struct Gradient {
    std::array<double, 3> p0{};
    std::vector<double> log_eta;
};

/// Throws EstimationImpossible when the problem has no gated-in samples.
[[nodiscard]] double negative_log_likelihood(const LikelihoodState& state, const Problem& problem,
                                             const kernels::KernelTable& kernel = kernels::active());

/// Partials of negative_log_likelihood with gating and sigma2 held fixed.
[[nodiscard]] Gradient gradient(const LikelihoodState& state, const Problem& problem,
                                const kernels::KernelTable& kernel = kernels::active());

/// Mean of squared residuals (gated-out entries are zeros), floored.
[[nodiscard]] double sigma2_closed_form(std::span<const double> residuals, double floor = 1e-6);

/// Same, from a residual sum of squares over `n` samples.
[[nodiscard]] double sigma2_from_rss(double rss, std::size_t n, double floor = 1e-6);

/// Sets every sigma2_i to its closed-form optimum at the current (p0, eta).
void refresh_sigma2(LikelihoodState& state, const Problem& problem, double floor = 1e-6,
                    const kernels::KernelTable& kernel = kernels::active());

/// log eta_i starting guesses for a given p0: per-receiver median of the
/// values implied by each gated sample.
[[nodiscard]] std::vector<double> initial_log_eta(const Problem& problem, const Position& p0,
                                                  std::span<const double> alpha);

enum class Failure { none, not_converged, outside_bounds, non_finite };

[[nodiscard]] std::string_view to_string(Failure f) noexcept;

struct DescentResult {
    LikelihoodState state;
    double nll = 0.0;
    int iterations = 0;
    double gradient_measure = 0.0;
    Failure failure = Failure::none;
    std::vector<double> nll_history;  ///< NLL after each accepted step (fresh sigma2)

    [[nodiscard]] bool converged() const noexcept { return failure == Failure::none; }
};

/// Damped Gauss-Newton descent with Armijo backtracking on (p0, log eta)
/// from `init`; alpha stays fixed and sigma2 is refreshed after every step.
[[nodiscard]] DescentResult descend(const Problem& problem, LikelihoodState init, const MleConfig& config,
                                    const kernels::KernelTable& kernel = kernels::active());

struct AlphaFit {
    double alpha_hat = 0.0;
    double log_eta_hat = 0.0;
    double sigma2_hat = 0.0;
    double nll = 0.0;
    bool low_information = false;
};

/// Per receiver, the grid alpha minimizing its NLL term with eta
/// re-optimized at fixed p0.
[[nodiscard]] std::vector<AlphaFit> alpha_grid_search(const Problem& problem, const Position& p0,
                                                      const MleConfig& config,
                                                      const kernels::KernelTable& kernel = kernels::active());

/// Indices with alpha_hat <= threshold and any detection. Throws
/// EstimationImpossible when fewer than `min_selected` remain.
[[nodiscard]] std::vector<std::size_t> select_receivers(std::span<const double> alpha_hat,
                                                        const std::vector<bool>& any_detected,
                                                        double threshold = 2.3, std::size_t min_selected = 3);

struct ReceiverEstimate {
    ReceiverId id;
    double alpha_hat = 0.0;
    double eta_hat = 0.0;
    double sigma2_hat = 0.0;
    bool selected = false;
    bool low_information = false;
};

struct EstimateReport {
    std::string method = "mle";
    Position p0_hat;
    /// false means p0_hat must be treated as unreliable
    bool converged = false;
    std::string failure;
    std::vector<ReceiverId> selected_receivers;
    std::vector<ReceiverEstimate> receivers;
    int iterations = 0;
    double nll = 0.0;
};

/// Full pipeline: multistart descent, alpha grid search, receiver
/// selection, refinement on the selected set. Throws EstimationImpossible
/// with no detections or fewer than 3 selected receivers.
[[nodiscard]] EstimateReport estimate(const detect::Observations& obs, const MleConfig& config,
                                      const kernels::KernelTable& kernel = kernels::active());

}  // namespace jamloc::mle
