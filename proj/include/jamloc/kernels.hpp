/**
 * @file kernels.hpp
 * @brief Inner-loop kernels for the gated CNIR residual model.
 *
 * For each gated-in sample k of one receiver the residual is
 *
 *     X_k = e_k + 10*log10(eta * d_k^-alpha + 1),   d_k = max(|p0 - p_k|, 1 m)
 *
 * where e_k = S_k - S_bar (dB). The kernels accumulate sum X_k^2 and, for
 * the gradient variant, its partials with respect to p0 and log(eta).
 *
 * A scalar reference implementation is always available. An AVX2+FMA
 * variant is compiled on x86-64 and chosen at runtime when the CPU
 * supports it. Set JAMLOC_KERNEL=scalar to force the reference path.
 */
#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace jamloc::kernels {

/// Structure-of-arrays view of gated-in samples of one receiver.
struct SampleBlock {
    std::span<const double> x;
    std::span<const double> y;
    std::span<const double> z;
    std::span<const double> excess_db;  ///< S - S_bar

    [[nodiscard]] std::size_t size() const noexcept { return excess_db.size(); }
};

struct ModelParams {
    double px = 0.0;
    double py = 0.0;
    double pz = 0.0;
    double log_eta = 0.0;
    double alpha = 2.0;
};

/// Sums of products of the residual partials (Gauss-Newton matrix J^T J
/// of one receiver); e stands for log(eta).
struct JtJ {
    double xx = 0.0, xy = 0.0, xz = 0.0, yy = 0.0, yz = 0.0, zz = 0.0;
    double xe = 0.0, ye = 0.0, ze = 0.0, ee = 0.0;
};

/// Sum of squared residuals, its partials and J^T J.
struct RssGrad {
    double rss = 0.0;
    double d_px = 0.0;
    double d_py = 0.0;
    double d_pz = 0.0;
    double d_log_eta = 0.0;
    JtJ jtj;

    RssGrad& operator+=(const RssGrad& o) noexcept {
        rss += o.rss;
        d_px += o.d_px;
        d_py += o.d_py;
        d_pz += o.d_pz;
        d_log_eta += o.d_log_eta;
        jtj.xx += o.jtj.xx;
        jtj.xy += o.jtj.xy;
        jtj.xz += o.jtj.xz;
        jtj.yy += o.jtj.yy;
        jtj.yz += o.jtj.yz;
        jtj.zz += o.jtj.zz;
        jtj.xe += o.jtj.xe;
        jtj.ye += o.jtj.ye;
        jtj.ze += o.jtj.ze;
        jtj.ee += o.jtj.ee;
        return *this;
    }
};

using RssFn = double (*)(const SampleBlock&, const ModelParams&) noexcept;
using RssGradFn = RssGrad (*)(const SampleBlock&, const ModelParams&) noexcept;

struct KernelTable {
    std::string_view name;
    RssFn rss;
    RssGradFn rss_grad;
};

/// Minimum modeled distance; the jammer antenna and a phone never co-locate.
inline constexpr double kMinDistance = 1.0;

[[nodiscard]] const KernelTable& scalar() noexcept;

/// AVX2+FMA variant, or nullptr when not compiled in or unsupported by the CPU.
[[nodiscard]] const KernelTable* avx2() noexcept;

/// Kernel selected once per process.
[[nodiscard]] const KernelTable& active() noexcept;

}  // namespace jamloc::kernels
