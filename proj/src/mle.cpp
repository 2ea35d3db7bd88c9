#include "jamloc/mle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace jamloc::mle {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

kernels::ModelParams params_for(const LikelihoodState& s, std::size_t i) {
    return {s.p0.x, s.p0.y, s.p0.z, s.log_eta[i], s.alpha[i]};
}

double receiver_nll(double rss, std::size_t n, double sigma2) {
    return 0.5 * static_cast<double>(n) * std::log(kTwoPi * sigma2) + rss / (2.0 * sigma2);
}

double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    if (v.size() % 2 == 1) return v[mid];
    const double hi = v[mid];
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

template <class F>
double golden_minimize(F&& f, double a, double b, double tol) {
    constexpr double inv_phi = 0.6180339887498948482;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

void require_gated(const Problem& problem) {
    if (problem.gated_count() == 0) {
        throw EstimationImpossible("no gated-in samples: no jamming detected");
    }
}

bool inside_inflated(const Problem& problem, const Position& p, double inflation) {
    const Bounds& b = problem.bounds();
    const Position c = b.center();
    const double half = inflation * std::max(b.radius(), 1.0);
    return std::abs(p.x - c.x) <= half && std::abs(p.y - c.y) <= half && std::abs(p.z - c.z) <= half;
}

struct Evaluation {
    double nll = 0.0;
    std::vector<double> grad;  // scaled coordinates: [p0 / scale..., log_eta...]
    Eigen::MatrixXd gauss_newton;  // sum_i J_i^T J_i / sigma2_i, same coordinates
    double weight = 0.0;           // sum_i n_gated_i / sigma2_i
};

class Objective {
public:
    Objective(const Problem& problem, const kernels::KernelTable& kernel, double scale)
        : problem_(problem), kernel_(kernel), scale_(scale) {}

    [[nodiscard]] std::vector<double> pack(const LikelihoodState& s) const {
        std::vector<double> theta{s.p0.x / scale_, s.p0.y / scale_, s.p0.z / scale_};
        theta.insert(theta.end(), s.log_eta.begin(), s.log_eta.end());
        return theta;
    }

    void unpack(std::span<const double> theta, LikelihoodState& s) const {
        s.p0 = {theta[0] * scale_, theta[1] * scale_, theta[2] * scale_};
        std::copy(theta.begin() + 3, theta.end(), s.log_eta.begin());
    }

    /// NLL at fixed sigma2; per-receiver RSS is stored in `rss` when given.
    [[nodiscard]] double value(const LikelihoodState& s, std::vector<double>* rss = nullptr) const {
        double total = 0.0;
        const auto& rx = problem_.receivers();
        if (rss) rss->resize(rx.size());
        for (std::size_t i = 0; i < rx.size(); ++i) {
            const double r = kernel_.rss(rx[i].block(), params_for(s, i));
            if (rss) (*rss)[i] = r;
            total += receiver_nll(r, rx[i].total_samples, s.sigma2[i]);
        }
        return total;
    }

    [[nodiscard]] Evaluation evaluate(const LikelihoodState& s) const {
        const auto& rx = problem_.receivers();
        Evaluation e;
        const auto dim = static_cast<Eigen::Index>(3 + rx.size());
        e.grad.assign(3 + rx.size(), 0.0);
        e.gauss_newton = Eigen::MatrixXd::Zero(dim, dim);
        auto& h = e.gauss_newton;
        const double s2 = scale_ * scale_;
        for (std::size_t i = 0; i < rx.size(); ++i) {
            const kernels::RssGrad g = kernel_.rss_grad(rx[i].block(), params_for(s, i));
            const double w = 1.0 / (2.0 * s.sigma2[i]);
            e.nll += receiver_nll(g.rss, rx[i].total_samples, s.sigma2[i]);
            e.grad[0] += w * g.d_px * scale_;
            e.grad[1] += w * g.d_py * scale_;
            e.grad[2] += w * g.d_pz * scale_;
            e.grad[3 + i] = w * g.d_log_eta;
            e.weight += static_cast<double>(rx[i].gated_count()) / s.sigma2[i];

            const double v = 1.0 / s.sigma2[i];
            const kernels::JtJ& j = g.jtj;
            const auto ei = static_cast<Eigen::Index>(3 + i);
            h(0, 0) += v * j.xx * s2;
            h(0, 1) += v * j.xy * s2;
            h(0, 2) += v * j.xz * s2;
            h(1, 1) += v * j.yy * s2;
            h(1, 2) += v * j.yz * s2;
            h(2, 2) += v * j.zz * s2;
            h(0, ei) = v * j.xe * scale_;
            h(1, ei) = v * j.ye * scale_;
            h(2, ei) = v * j.ze * scale_;
            h(ei, ei) = v * j.ee;
        }
        h.triangularView<Eigen::StrictlyLower>() = h.transpose().triangularView<Eigen::StrictlyLower>();
        return e;
    }

private:
    const Problem& problem_;
    const kernels::KernelTable& kernel_;
    double scale_;
};

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Damped Gauss-Newton direction; falls back to steepest descent when the
// solve does not give a descent direction.
std::vector<double> search_direction(const Evaluation& e, double damping) {
    const auto dim = static_cast<Eigen::Index>(e.grad.size());
    const Eigen::Map<const Eigen::VectorXd> g(e.grad.data(), dim);
    Eigen::MatrixXd a = e.gauss_newton;
    const double top = std::max(a.diagonal().maxCoeff(), 1e-300);
    for (Eigen::Index k = 0; k < dim; ++k) a(k, k) += damping * a(k, k) + 1e-12 * top;
    Eigen::VectorXd d = a.ldlt().solve(-g);
    if (!d.allFinite() || !(d.dot(g) < 0.0)) d = -g / top;
    return {d.data(), d.data() + dim};
}

}  // namespace

std::vector<double> AlphaGrid::values() const {
    std::vector<double> v;
    const auto steps = static_cast<long>(std::floor((max - min) / step + 1e-9));
    for (long k = 0; k <= steps; ++k) v.push_back(min + static_cast<double>(k) * step);
    return v;
}

void MleConfig::validate() const {
    if (!(alpha_grid.min < alpha_grid.max) || !(alpha_grid.step > 0.0)) {
        throw InvalidInput("alpha grid needs min < max and step > 0");
    }
    if (alpha_select_threshold < alpha_grid.min || alpha_select_threshold > alpha_grid.max) {
        throw InvalidInput("alpha selection threshold must lie within the grid");
    }
    if (multistart_count < 1 || refine_multistart_count < 1) throw InvalidInput("multistart count must be >= 1");
    if (max_iterations < 1) throw InvalidInput("max_iterations must be >= 1");
    if (!(gradient_tolerance > 0.0)) throw InvalidInput("gradient tolerance must be positive");
    if (!(sigma2_floor > 0.0)) throw InvalidInput("sigma2 floor must be positive");
    if (known_alpha && !(*known_alpha >= 1.0)) throw InvalidInput("known alpha must be >= 1");
}

double gated_residual(std::optional<double> s_dbhz, double s_bar_dbhz, double d, double eta, double alpha,
                      double gamma_db) {
    if (!s_dbhz) return 0.0;
    const double excess = *s_dbhz - s_bar_dbhz;
    if (!(excess < gamma_db)) return 0.0;
    const double dd = std::max(d, kernels::kMinDistance);
    return excess + 10.0 * std::log10(eta * std::pow(dd, -alpha) + 1.0);
}

Problem Problem::build(const detect::Observations& obs) {
    Problem p;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto& track = obs.tracks[i];
        const auto& series = obs.series[i];
        const auto& mask = obs.masks[i];
        if (!series.aligned_with(track) || mask.detected.size() != series.size()) {
            throw InvalidInput("observations are not aligned");
        }
        ReceiverData r;
        r.id = track.id();
        r.total_samples = series.size();
        r.any_detected = mask.any_detected();
        for (std::size_t n = 0; n < series.size(); ++n) {
            const Position& pos = track[n].position;
            r.track_bounds.extend(pos);
            r.altitude_sum += pos.z;
            if (!mask.detected[n]) continue;
            r.detected_sum = r.detected_sum + pos;
            ++r.detected_count;
            if (series[n].saturated()) continue;
            r.x.push_back(pos.x);
            r.y.push_back(pos.y);
            r.z.push_back(pos.z);
            r.excess_db.push_back(*series[n].cnir_dbhz - obs.baselines[i].s_bar_dbhz);
        }
        p.receivers_.push_back(std::move(r));
    }
    p.finish();
    return p;
}

Problem Problem::subset(std::span<const std::size_t> indices) const {
    Problem p;
    for (std::size_t i : indices) p.receivers_.push_back(receivers_.at(i));
    p.finish();
    return p;
}

void Problem::finish() {
    bounds_ = Bounds{};
    double alt_sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : receivers_) {
        if (r.track_bounds.empty()) continue;
        bounds_.extend(r.track_bounds.lo);
        bounds_.extend(r.track_bounds.hi);
        alt_sum += r.altitude_sum;
        n += r.total_samples;
    }
    mean_altitude_ = n > 0 ? alt_sum / static_cast<double>(n) : 0.0;
}

std::size_t Problem::gated_count() const noexcept {
    std::size_t n = 0;
    for (const auto& r : receivers_) n += r.gated_count();
    return n;
}

Position Problem::detection_centroid() const noexcept {
    Position sum;
    std::size_t n = 0;
    for (const auto& r : receivers_) {
        sum = sum + r.detected_sum;
        n += r.detected_count;
    }
    if (n == 0) return bounds_.center();
    return (1.0 / static_cast<double>(n)) * sum;
}

double negative_log_likelihood(const LikelihoodState& state, const Problem& problem,
                               const kernels::KernelTable& kernel) {
    require_gated(problem);
    return Objective(problem, kernel, 1.0).value(state);
}

Gradient gradient(const LikelihoodState& state, const Problem& problem, const kernels::KernelTable& kernel) {
    const Evaluation e = Objective(problem, kernel, 1.0).evaluate(state);
    Gradient g;
    g.p0 = {e.grad[0], e.grad[1], e.grad[2]};
    g.log_eta.assign(e.grad.begin() + 3, e.grad.end());
    return g;
}

double sigma2_closed_form(std::span<const double> residuals, double floor) {
    if (residuals.empty()) throw InvalidInput("sigma2 needs at least one residual");
    double rss = 0.0;
    for (double r : residuals) rss += r * r;
    return sigma2_from_rss(rss, residuals.size(), floor);
}

double sigma2_from_rss(double rss, std::size_t n, double floor) {
    if (n == 0) throw InvalidInput("sigma2 needs at least one sample");
    return std::max(rss / static_cast<double>(n), floor);
}

void refresh_sigma2(LikelihoodState& state, const Problem& problem, double floor,
                    const kernels::KernelTable& kernel) {
    const auto& rx = problem.receivers();
    state.sigma2.resize(rx.size());
    for (std::size_t i = 0; i < rx.size(); ++i) {
        state.sigma2[i] = sigma2_from_rss(kernel.rss(rx[i].block(), params_for(state, i)), rx[i].total_samples, floor);
    }
}

std::vector<double> initial_log_eta(const Problem& problem, const Position& p0, std::span<const double> alpha) {
    const auto& rx = problem.receivers();
    std::vector<double> out(rx.size(), 0.0);
    for (std::size_t i = 0; i < rx.size(); ++i) {
        std::vector<double> implied;
        const auto& r = rx[i];
        for (std::size_t k = 0; k < r.gated_count(); ++k) {
            const double jnr = std::pow(10.0, -r.excess_db[k] / 10.0) - 1.0;
            if (!(jnr > 0.0)) continue;
            const Position pk{r.x[k], r.y[k], r.z[k]};
            const double d = std::max(distance(p0, pk), kernels::kMinDistance);
            implied.push_back(std::log(jnr) + alpha[i] * std::log(d));
        }
        if (!implied.empty()) out[i] = median(std::move(implied));
    }
    return out;
}

std::string_view to_string(Failure f) noexcept {
    switch (f) {
        case Failure::none: return "none";
        case Failure::not_converged: return "not_converged";
        case Failure::outside_bounds: return "outside_bounds";
        case Failure::non_finite: return "non_finite";
    }
    return "unknown";
}

DescentResult descend(const Problem& problem, LikelihoodState init, const MleConfig& config,
                      const kernels::KernelTable& kernel) {
    require_gated(problem);
    const double scale = std::max(problem.bounds().radius(), 1.0);
    const Objective objective(problem, kernel, scale);

    DescentResult result;
    LikelihoodState& state = result.state;
    state = std::move(init);
    refresh_sigma2(state, problem, config.sigma2_floor, kernel);

    std::vector<double> theta = objective.pack(state);
    Evaluation eval = objective.evaluate(state);
    result.nll_history.push_back(eval.nll);

    double damping = 1e-6;
    bool gradient_ok = false;
    bool finite = std::isfinite(eval.nll) && all_finite(eval.grad);
    LikelihoodState trial_state = state;
    std::vector<double> trial(theta.size());
    std::vector<double> trial_rss;

    int it = 0;
    for (; it < config.max_iterations && finite; ++it) {
        result.gradient_measure = inf_norm(eval.grad) / std::max(eval.weight, 1e-300);
        if (result.gradient_measure <= config.gradient_tolerance) {
            gradient_ok = true;
            break;
        }
        const std::vector<double> dir = search_direction(eval, damping);
        double slope = 0.0;
        for (std::size_t k = 0; k < theta.size(); ++k) slope += eval.grad[k] * dir[k];

        bool accepted = false;
        double step = 1.0;
        for (int bt = 0; bt < 200 && step > 1e-300; ++bt) {
            for (std::size_t k = 0; k < theta.size(); ++k) trial[k] = theta[k] + step * dir[k];
            objective.unpack(trial, trial_state);
            const double trial_nll = objective.value(trial_state, &trial_rss);
            if (std::isfinite(trial_nll) && trial_nll <= eval.nll + config.armijo_c * step * slope) {
                accepted = true;
                break;
            }
            step *= config.backtrack_factor;
        }
        if (!accepted) break;  // no descent possible at machine precision
        // Full steps relax the damping, heavy backtracking tightens it.
        damping = step == 1.0 ? std::max(damping * 0.3, 1e-9) : std::min(damping * 10.0, 1e6);

        for (std::size_t i = 0; i < problem.size(); ++i) {
            trial_state.sigma2[i] =
                sigma2_from_rss(trial_rss[i], problem.receivers()[i].total_samples, config.sigma2_floor);
        }
        Evaluation next = objective.evaluate(trial_state);
        finite = std::isfinite(next.nll) && all_finite(next.grad);

        theta.swap(trial);
        state = trial_state;
        eval = std::move(next);
        result.nll_history.push_back(eval.nll);
    }
    if (!gradient_ok && finite && it >= config.max_iterations) {
        result.gradient_measure = inf_norm(eval.grad) / std::max(eval.weight, 1e-300);
        gradient_ok = result.gradient_measure <= config.gradient_tolerance;
    }

    result.iterations = it;
    result.nll = eval.nll;
    if (!finite || !state.p0.finite()) {
        result.failure = Failure::non_finite;
    } else if (!gradient_ok) {
        result.failure = Failure::not_converged;
    } else if (!inside_inflated(problem, state.p0, config.bounds_inflation)) {
        result.failure = Failure::outside_bounds;
    }
    return result;
}

std::vector<AlphaFit> alpha_grid_search(const Problem& problem, const Position& p0, const MleConfig& config,
                                        const kernels::KernelTable& kernel) {
    const std::vector<double> grid = config.alpha_grid.values();
    const auto& rx = problem.receivers();
    std::vector<AlphaFit> fits(rx.size());
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const auto& r = rx[i];
        const kernels::SampleBlock block = r.block();
        const Problem single = problem.subset(std::span<const std::size_t>(&i, 1));
        double best_nll = INFINITY;
        double worst_nll = -INFINITY;
        for (double alpha : grid) {
            double log_eta = 0.0;
            double rss = 0.0;
            if (r.gated_count() > 0) {
                const double a[1] = {alpha};
                const double center = initial_log_eta(single, p0, a)[0];
                auto f = [&](double le) { return kernel.rss(block, {p0.x, p0.y, p0.z, le, alpha}); };
                // coarse scan then golden-section refinement
                double best_le = center;
                double best_f = INFINITY;
                for (int k = -12; k <= 12; ++k) {
                    const double le = center + k;
                    const double v = f(le);
                    if (v < best_f) {
                        best_f = v;
                        best_le = le;
                    }
                }
                log_eta = golden_minimize(f, best_le - 1.0, best_le + 1.0, 1e-10);
                rss = f(log_eta);
            }
            const double sigma2 = sigma2_from_rss(rss, r.total_samples, config.sigma2_floor);
            const double nll = receiver_nll(rss, r.total_samples, sigma2);
            worst_nll = std::max(worst_nll, nll);
            if (nll < best_nll) {
                best_nll = nll;
                fits[i] = {alpha, log_eta, sigma2, nll, false};
            }
        }
        fits[i].low_information = (worst_nll - best_nll) < config.low_information_tolerance;
    }
    return fits;
}

std::vector<std::size_t> select_receivers(std::span<const double> alpha_hat, const std::vector<bool>& any_detected,
                                          double threshold, std::size_t min_selected) {
    if (alpha_hat.size() != any_detected.size()) throw InvalidInput("selection inputs differ in length");
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < alpha_hat.size(); ++i) {
        if (alpha_hat[i] <= threshold + 1e-9 && any_detected[i]) kept.push_back(i);
    }
    if (kept.size() < min_selected || kept.empty()) {
        throw EstimationImpossible("only " + std::to_string(kept.size()) +
                                   " receivers pass selection; the position is unidentifiable");
    }
    return kept;
}

namespace {

DescentResult best_of_starts(const Problem& problem, const std::vector<Position>& starts,
                             const std::vector<double>& alpha, const std::vector<double>* log_eta_hint,
                             const MleConfig& config, const kernels::KernelTable& kernel) {
    DescentResult best;
    bool have = false;
    for (std::size_t s = 0; s < starts.size(); ++s) {
        LikelihoodState init;
        init.p0 = starts[s];
        init.alpha = alpha;
        init.log_eta = (s == 0 && log_eta_hint) ? *log_eta_hint : initial_log_eta(problem, starts[s], alpha);
        DescentResult r = descend(problem, std::move(init), config, kernel);
        const bool better = !have || (std::isfinite(r.nll) && (!std::isfinite(best.nll) || r.nll < best.nll));
        if (better) best = std::move(r);
        have = true;
    }
    return best;
}

std::vector<Position> make_starts(const Problem& problem, Position first, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double spread = problem.bounds().radius();
    std::normal_distribution<double> jitter(0.0, spread);
    const Position centroid = problem.detection_centroid();
    first.z = problem.mean_altitude();
    std::vector<Position> starts{first};
    for (int s = 1; s < count; ++s) {
        starts.push_back({centroid.x + jitter(rng), centroid.y + jitter(rng), problem.mean_altitude()});
    }
    return starts;
}

}  // namespace

EstimateReport estimate(const detect::Observations& obs, const MleConfig& config,
                        const kernels::KernelTable& kernel) {
    config.validate();
    if (!obs.any_detected()) throw EstimationImpossible("no jamming detected");
    const Problem full = Problem::build(obs);
    require_gated(full);

    EstimateReport report;
    report.receivers.resize(full.size());
    for (std::size_t i = 0; i < full.size(); ++i) report.receivers[i].id = full.receivers()[i].id;

    const double stage1_alpha = config.known_alpha.value_or(config.initial_alpha);
    const std::vector<double> alpha1(full.size(), stage1_alpha);
    const DescentResult stage1 =
        best_of_starts(full, make_starts(full, full.detection_centroid(), config.multistart_count, config.seed),
                       alpha1, nullptr, config, kernel);

    std::vector<std::size_t> selected;
    DescentResult final_run;
    std::vector<AlphaFit> fits;
    if (config.known_alpha) {
        for (std::size_t i = 0; i < full.size(); ++i) {
            if (full.receivers()[i].any_detected) selected.push_back(i);
        }
        final_run = stage1;
    } else {
        fits = alpha_grid_search(full, stage1.state.p0, config, kernel);
        std::vector<double> alpha_hat;
        std::vector<bool> detected_flags;
        for (std::size_t i = 0; i < full.size(); ++i) {
            alpha_hat.push_back(fits[i].alpha_hat);
            detected_flags.push_back(full.receivers()[i].any_detected);
        }
        selected = select_receivers(alpha_hat, detected_flags, config.alpha_select_threshold);

        const Problem chosen = full.subset(selected);
        std::vector<double> alpha2;
        std::vector<double> log_eta2;
        for (std::size_t i : selected) {
            alpha2.push_back(fits[i].alpha_hat);
            log_eta2.push_back(fits[i].log_eta_hat);
        }
        final_run = best_of_starts(
            chosen, make_starts(chosen, stage1.state.p0, config.refine_multistart_count, config.seed + 1), alpha2,
            &log_eta2, config, kernel);
    }

    report.p0_hat = final_run.state.p0;
    report.converged = final_run.converged();
    report.failure = std::string(to_string(final_run.failure));
    report.iterations = stage1.iterations + (config.known_alpha ? 0 : final_run.iterations);
    report.nll = final_run.nll;
    for (std::size_t i = 0; i < full.size(); ++i) {
        auto& re = report.receivers[i];
        if (!fits.empty()) {
            re.alpha_hat = fits[i].alpha_hat;
            re.eta_hat = std::exp(fits[i].log_eta_hat);
            re.sigma2_hat = fits[i].sigma2_hat;
            re.low_information = fits[i].low_information;
        } else {
            re.alpha_hat = stage1_alpha;
            re.eta_hat = std::exp(stage1.state.log_eta[i]);
            re.sigma2_hat = stage1.state.sigma2[i];
        }
    }
    for (std::size_t k = 0; k < selected.size(); ++k) {
        const std::size_t i = selected[k];
        auto& re = report.receivers[i];
        re.selected = true;
        re.alpha_hat = final_run.state.alpha[config.known_alpha ? i : k];
        re.eta_hat = final_run.state.eta(config.known_alpha ? i : k);
        re.sigma2_hat = final_run.state.sigma2[config.known_alpha ? i : k];
        report.selected_receivers.push_back(re.id);
    }
    return report;
}

}  // namespace jamloc::mle
