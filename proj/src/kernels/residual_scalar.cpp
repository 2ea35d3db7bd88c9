#include <algorithm>
#include <cmath>
#include <numbers>

#include "jamloc/kernels.hpp"

namespace jamloc::kernels {
namespace {

constexpr double kDbPerNeper = 10.0 / std::numbers::ln10;

double rss_scalar(const SampleBlock& b, const ModelParams& m) noexcept {
    const double half_alpha = 0.5 * m.alpha;
    double acc = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        const double dx = m.px - b.x[k];
        const double dy = m.py - b.y[k];
        const double dz = m.pz - b.z[k];
        const double d2 = std::max(dx * dx + dy * dy + dz * dz, kMinDistance * kMinDistance);
        const double u = std::exp(std::min(m.log_eta - half_alpha * std::log(d2), 700.0));
        const double r = b.excess_db[k] + kDbPerNeper * std::log1p(u);
        acc += r * r;
    }
    return acc;
}

RssGrad rss_grad_scalar(const SampleBlock& b, const ModelParams& m) noexcept {
    const double half_alpha = 0.5 * m.alpha;
    RssGrad g;
    for (std::size_t k = 0; k < b.size(); ++k) {
        const double dx = m.px - b.x[k];
        const double dy = m.py - b.y[k];
        const double dz = m.pz - b.z[k];
        const double raw_d2 = dx * dx + dy * dy + dz * dz;
        const bool clamped = raw_d2 <= kMinDistance * kMinDistance;
        const double d2 = clamped ? kMinDistance * kMinDistance : raw_d2;
        const double u = std::exp(std::min(m.log_eta - half_alpha * std::log(d2), 700.0));
        const double r = b.excess_db[k] + kDbPerNeper * std::log1p(u);
        const double w = u / (1.0 + u);
        // d r / d log(eta) = c*w ; d r / d p0 = -c*alpha*w*(p0 - p)/d^2
        const double he = kDbPerNeper * w;
        const double q = clamped ? 0.0 : -he * m.alpha / d2;
        const double hx = q * dx;
        const double hy = q * dy;
        const double hz = q * dz;
        g.rss += r * r;
        g.d_log_eta += 2.0 * r * he;
        g.d_px += 2.0 * r * hx;
        g.d_py += 2.0 * r * hy;
        g.d_pz += 2.0 * r * hz;
        JtJ& j = g.jtj;
        j.xx += hx * hx;
        j.xy += hx * hy;
        j.xz += hx * hz;
        j.yy += hy * hy;
        j.yz += hy * hz;
        j.zz += hz * hz;
        j.xe += hx * he;
        j.ye += hy * he;
        j.ze += hz * he;
        j.ee += he * he;
    }
    return g;
}

}  // namespace

const KernelTable& scalar() noexcept {
    static constexpr KernelTable table{"scalar", &rss_scalar, &rss_grad_scalar};
    return table;
}

}  // namespace jamloc::kernels
