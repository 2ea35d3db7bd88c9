#include "jamloc/baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

namespace jamloc::baselines {

void LsCalibration::validate() const {
    if (!(ratio_ref > 0.0)) throw InvalidInput("calibration ratio must be positive");
    if (!(d_ref > 0.0)) throw InvalidInput("calibration distance must be positive");
    if (!(alpha > 0.0)) throw InvalidInput("calibration alpha must be positive");
}

double jnr_from_cnir(double s_dbhz, double s_bar_dbhz) noexcept {
    return std::max(0.0, std::pow(10.0, (s_bar_dbhz - s_dbhz) / 10.0) - 1.0);
}

Position mean_position_estimate(const std::vector<ReceiverTrack>& tracks,
                                const std::vector<detect::DetectionMask>& masks, MeanWeighting weighting) {
    if (tracks.size() != masks.size()) throw InvalidInput("track/mask count mismatch");
    Position sum;
    double weight = 0.0;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        if (masks[i].detected.size() != tracks[i].size()) throw InvalidInput("mask/track length mismatch");
        Position rsum;
        std::size_t n = 0;
        for (std::size_t k = 0; k < tracks[i].size(); ++k) {
            if (!masks[i].detected[k]) continue;
            rsum = rsum + tracks[i][k].position;
            ++n;
        }
        if (n == 0) continue;
        if (weighting == MeanWeighting::per_sample) {
            sum = sum + rsum;
            weight += static_cast<double>(n);
        } else {
            sum = sum + (1.0 / static_cast<double>(n)) * rsum;
            weight += 1.0;
        }
    }
    if (weight == 0.0) throw EstimationImpossible("no jamming detected");
    return (1.0 / weight) * sum;
}

LsCalibration calibration_from_truth(const ReceiverTruth& truth, double d_ref) {
    return {truth.eta * std::pow(d_ref, -truth.alpha), d_ref, 2.0};
}

Position ls_estimate(const detect::Observations& obs, const std::vector<LsCalibration>& calibration) {
    if (calibration.size() != obs.size()) throw InvalidInput("one calibration per receiver is required");

    struct Row {
        Position p;
        double range;
    };
    if (!obs.any_detected()) throw EstimationImpossible("no jamming detected");
    std::vector<Row> rows;
    std::set<std::size_t> contributing;
    Bounds bounds;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        // Receivers that never detected contribute no ranges and need no calibration.
        if (obs.masks[i].any_detected()) calibration[i].validate();
        const auto& series = obs.series[i];
        const double s_bar = obs.baselines[i].s_bar_dbhz;
        for (std::size_t n = 0; n < series.size(); ++n) {
            bounds.extend(obs.tracks[i][n].position);
            if (!obs.masks[i].detected[n] || series[n].saturated()) continue;
            const double ratio = jnr_from_cnir(*series[n].cnir_dbhz, s_bar);
            if (!(ratio > 0.0)) continue;
            const double range =
                calibration[i].d_ref * std::pow(calibration[i].ratio_ref / ratio, 1.0 / calibration[i].alpha);
            rows.push_back({obs.tracks[i][n].position, range});
            contributing.insert(i);
        }
    }
    if (contributing.size() < 4) {
        throw EstimationImpossible("least squares needs 4 receivers with range estimates, have " +
                                   std::to_string(contributing.size()));
    }

    // Work in centered, scaled coordinates.
    Position center;
    for (const auto& r : rows) center = center + r.p;
    center = (1.0 / static_cast<double>(rows.size())) * center;
    const double scale = std::max(bounds.radius(), 1.0);

    double z_min = INFINITY;
    double z_max = -INFINITY;
    for (const auto& r : rows) {
        z_min = std::min(z_min, r.p.z);
        z_max = std::max(z_max, r.p.z);
    }
    const bool planar = (z_max - z_min) <= 1e-9 * scale;
    const int dims = planar ? 2 : 3;

    // |p_k|^2 - r_k^2 = 2 p_k . p0 - R, with R = |p0|^2 (plus the squared
    // height above the receiver plane in the planar case).
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), dims + 1);
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const Position q = (1.0 / scale) * (rows[k].p - center);
        const double r = rows[k].range / scale;
        const auto row = static_cast<Eigen::Index>(k);
        a(row, 0) = 2.0 * q.x;
        a(row, 1) = 2.0 * q.y;
        if (!planar) a(row, 2) = 2.0 * q.z;
        a(row, dims) = -1.0;
        const double q2 = q.x * q.x + q.y * q.y + (planar ? 0.0 : q.z * q.z);
        b(row) = q2 - r * r;
    }
    const Eigen::MatrixXd normal = a.transpose() * a;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal);
    const double lmax = eig.eigenvalues().maxCoeff();
    const double lmin = eig.eigenvalues().minCoeff();
    if (!(lmax > 0.0) || !(lmin > 1e-12 * lmax)) {
        throw EstimationImpossible("least-squares system is singular");
    }
    const Eigen::VectorXd sol = normal.ldlt().solve(a.transpose() * b);

    Position local{sol(0), sol(1), planar ? 0.0 : sol(2)};
    if (planar) {
        const double h2 = sol(dims) - sol(0) * sol(0) - sol(1) * sol(1);
        if (h2 < -1e-9) throw EstimationImpossible("least-squares solution is non-physical (negative height^2)");
        local.z = std::sqrt(std::max(h2, 0.0));
    }
    const Position p = center + scale * local;
    if (!p.finite()) throw EstimationImpossible("least-squares solution is not finite");
    const Position bc = bounds.center();
    const double half = 10.0 * scale;
    if (std::abs(p.x - bc.x) > half || std::abs(p.y - bc.y) > half || std::abs(p.z - bc.z) > half) {
        throw EstimationImpossible("least-squares solution is outside the plausible region");
    }
    return p;
}

mle::EstimateReport make_report(std::string method, const Position& p, const detect::Observations& obs) {
    mle::EstimateReport r;
    r.method = std::move(method);
    r.p0_hat = p;
    r.converged = true;
    r.failure = "none";
    for (std::size_t i = 0; i < obs.size(); ++i) {
        mle::ReceiverEstimate re;
        re.id = obs.tracks[i].id();
        re.selected = obs.masks[i].any_detected();
        re.alpha_hat = 2.0;
        r.receivers.push_back(re);
        if (re.selected) r.selected_receivers.push_back(re.id);
    }
    return r;
}

}  // namespace jamloc::baselines
