#include <algorithm>
#include <cmath>
#include <numbers>

#include "jamloc/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include "vecmath_avx2.hpp"

namespace jamloc::kernels {
namespace {

namespace vm = avx2_math;

constexpr double kDbPerNeper = 10.0 / std::numbers::ln10;
constexpr double kMinD2 = kMinDistance * kMinDistance;

struct Lanes {
    __m256d px, py, pz, log_eta, neg_half_alpha, c, min_d2, cap;
    explicit Lanes(const ModelParams& m)
        : px(vm::broadcast(m.px)),
          py(vm::broadcast(m.py)),
          pz(vm::broadcast(m.pz)),
          log_eta(vm::broadcast(m.log_eta)),
          neg_half_alpha(vm::broadcast(-0.5 * m.alpha)),
          c(vm::broadcast(kDbPerNeper)),
          min_d2(vm::broadcast(kMinD2)),
          cap(vm::broadcast(700.0)) {}
};

double rss_avx2(const SampleBlock& b, const ModelParams& m) noexcept {
    const Lanes l(m);
    const std::size_t n = b.size();
    const std::size_t n4 = n & ~std::size_t{3};
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < n4; k += 4) {
        const __m256d dx = _mm256_sub_pd(l.px, _mm256_loadu_pd(&b.x[k]));
        const __m256d dy = _mm256_sub_pd(l.py, _mm256_loadu_pd(&b.y[k]));
        const __m256d dz = _mm256_sub_pd(l.pz, _mm256_loadu_pd(&b.z[k]));
        __m256d d2 = _mm256_mul_pd(dx, dx);
        d2 = vm::fmadd(dy, dy, d2);
        d2 = vm::fmadd(dz, dz, d2);
        d2 = _mm256_max_pd(d2, l.min_d2);
        const __m256d expo = _mm256_min_pd(vm::fmadd(l.neg_half_alpha, vm::log(d2), l.log_eta), l.cap);
        const __m256d u = vm::exp(expo);
        const __m256d r = vm::fmadd(l.c, vm::log1p(u), _mm256_loadu_pd(&b.excess_db[k]));
        acc = vm::fmadd(r, r, acc);
    }
    double total = vm::hsum(acc);
    if (n4 < n) {
        const SampleBlock tail{b.x.subspan(n4), b.y.subspan(n4), b.z.subspan(n4), b.excess_db.subspan(n4)};
        total += scalar().rss(tail, m);
    }
    return total;
}

RssGrad rss_grad_avx2(const SampleBlock& b, const ModelParams& m) noexcept {
    const Lanes l(m);
    const __m256d one = vm::broadcast(1.0);
    const __m256d two = vm::broadcast(2.0);
    const __m256d neg_alpha = vm::broadcast(-m.alpha);
    const std::size_t n = b.size();
    const std::size_t n4 = n & ~std::size_t{3};
    __m256d acc_rss = _mm256_setzero_pd();
    __m256d acc_re = _mm256_setzero_pd();
    __m256d acc_rx = _mm256_setzero_pd();
    __m256d acc_ry = _mm256_setzero_pd();
    __m256d acc_rz = _mm256_setzero_pd();
    __m256d xx = _mm256_setzero_pd(), xy = _mm256_setzero_pd(), xz = _mm256_setzero_pd();
    __m256d yy = _mm256_setzero_pd(), yz = _mm256_setzero_pd(), zz = _mm256_setzero_pd();
    __m256d xe = _mm256_setzero_pd(), ye = _mm256_setzero_pd(), ze = _mm256_setzero_pd();
    __m256d ee = _mm256_setzero_pd();
    for (std::size_t k = 0; k < n4; k += 4) {
        const __m256d dx = _mm256_sub_pd(l.px, _mm256_loadu_pd(&b.x[k]));
        const __m256d dy = _mm256_sub_pd(l.py, _mm256_loadu_pd(&b.y[k]));
        const __m256d dz = _mm256_sub_pd(l.pz, _mm256_loadu_pd(&b.z[k]));
        __m256d raw_d2 = _mm256_mul_pd(dx, dx);
        raw_d2 = vm::fmadd(dy, dy, raw_d2);
        raw_d2 = vm::fmadd(dz, dz, raw_d2);
        const __m256d unclamped = _mm256_cmp_pd(raw_d2, l.min_d2, _CMP_GT_OQ);
        const __m256d d2 = _mm256_max_pd(raw_d2, l.min_d2);
        const __m256d expo = _mm256_min_pd(vm::fmadd(l.neg_half_alpha, vm::log(d2), l.log_eta), l.cap);
        const __m256d u = vm::exp(expo);
        const __m256d r = vm::fmadd(l.c, vm::log1p(u), _mm256_loadu_pd(&b.excess_db[k]));
        const __m256d he = _mm256_mul_pd(l.c, _mm256_div_pd(u, _mm256_add_pd(one, u)));
        const __m256d q = _mm256_and_pd(unclamped, _mm256_div_pd(_mm256_mul_pd(neg_alpha, he), d2));
        const __m256d hx = _mm256_mul_pd(q, dx);
        const __m256d hy = _mm256_mul_pd(q, dy);
        const __m256d hz = _mm256_mul_pd(q, dz);
        const __m256d two_r = _mm256_mul_pd(two, r);
        acc_rss = vm::fmadd(r, r, acc_rss);
        acc_re = vm::fmadd(two_r, he, acc_re);
        acc_rx = vm::fmadd(two_r, hx, acc_rx);
        acc_ry = vm::fmadd(two_r, hy, acc_ry);
        acc_rz = vm::fmadd(two_r, hz, acc_rz);
        xx = vm::fmadd(hx, hx, xx);
        xy = vm::fmadd(hx, hy, xy);
        xz = vm::fmadd(hx, hz, xz);
        yy = vm::fmadd(hy, hy, yy);
        yz = vm::fmadd(hy, hz, yz);
        zz = vm::fmadd(hz, hz, zz);
        xe = vm::fmadd(hx, he, xe);
        ye = vm::fmadd(hy, he, ye);
        ze = vm::fmadd(hz, he, ze);
        ee = vm::fmadd(he, he, ee);
    }
    RssGrad g;
    g.rss = vm::hsum(acc_rss);
    g.d_px = vm::hsum(acc_rx);
    g.d_py = vm::hsum(acc_ry);
    g.d_pz = vm::hsum(acc_rz);
    g.d_log_eta = vm::hsum(acc_re);
    g.jtj = {vm::hsum(xx), vm::hsum(xy), vm::hsum(xz), vm::hsum(yy), vm::hsum(yz),
             vm::hsum(zz), vm::hsum(xe), vm::hsum(ye), vm::hsum(ze), vm::hsum(ee)};
    if (n4 < n) {
        const SampleBlock tail{b.x.subspan(n4), b.y.subspan(n4), b.z.subspan(n4), b.excess_db.subspan(n4)};
        g += scalar().rss_grad(tail, m);
    }
    return g;
}

}  // namespace

const KernelTable* avx2() noexcept {
    static constexpr KernelTable table{"avx2", &rss_avx2, &rss_grad_avx2};
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &table : nullptr;
}

}  // namespace jamloc::kernels

#else

namespace jamloc::kernels {
const KernelTable* avx2() noexcept { return nullptr; }
}  // namespace jamloc::kernels

#endif
