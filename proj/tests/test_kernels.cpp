#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <string_view>
#include <vector>

#include "jamloc/kernels.hpp"

using namespace jamloc;
using kernels::ModelParams;
using kernels::SampleBlock;

namespace {

struct Samples {
    std::vector<double> x, y, z, e;
    SampleBlock block() const { return {x, y, z, e}; }
};

Samples random_samples(std::mt19937_64& rng, std::size_t n, double spread) {
    std::uniform_real_distribution<double> pos(-spread, spread);
    std::uniform_real_distribution<double> ex(-40.0, -3.0);
    Samples s;
    for (std::size_t k = 0; k < n; ++k) {
        s.x.push_back(pos(rng));
        s.y.push_back(pos(rng));
        s.z.push_back(0.1 * pos(rng));
        s.e.push_back(ex(rng));
    }
    return s;
}

// Direct per-sample evaluation of the residual model, independent of the kernels.
double reference_residual(const Samples& s, std::size_t k, const ModelParams& p) {
    const double d = std::max(std::hypot(p.px - s.x[k], p.py - s.y[k], p.pz - s.z[k]), 1.0);
    return s.e[k] + 10.0 * std::log10(std::exp(p.log_eta) * std::pow(d, -p.alpha) + 1.0);
}

double reference_rss(const Samples& s, const ModelParams& p) {
    double rss = 0.0;
    for (std::size_t k = 0; k < s.e.size(); ++k) {
        const double r = reference_residual(s, k, p);
        rss += r * r;
    }
    return rss;
}

bool close(double a, double b, double rel, double scale) {
    return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), scale});
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar kernel matches the direct model") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Samples s = random_samples(rng, 1 + trial % 37, 3000.0);
        const ModelParams p{100.0, -200.0, 5.0, 8.0 + 0.05 * trial, 1.5 + 0.01 * trial};
        CHECK(close(kernels::scalar().rss(s.block(), p), reference_rss(s, p), 1e-12, 1e-300));
    }
}

TEST_CASE("scalar and rss_grad agree on rss") {
    std::mt19937_64 rng(12);
    const Samples s = random_samples(rng, 101, 2000.0);
    const ModelParams p{10.0, 20.0, 0.0, 12.0, 2.0};
    CHECK(kernels::scalar().rss(s.block(), p) == doctest::Approx(kernels::scalar().rss_grad(s.block(), p).rss).epsilon(1e-14));
}

TEST_CASE("empty block") {
    const Samples s;
    const ModelParams p{};
    CHECK(kernels::scalar().rss(s.block(), p) == 0.0);
    CHECK(kernels::active().rss_grad(s.block(), p).d_px == 0.0);
}

TEST_CASE("clamped distance has no position gradient") {
    Samples s;
    s.x = {0.2};
    s.y = {0.1};
    s.z = {0.0};
    s.e = {-20.0};
    const ModelParams p{0.0, 0.0, 0.0, 10.0, 2.0};
    for (const auto* k : {&kernels::scalar(), kernels::avx2()}) {
        if (!k) continue;
        const auto g = k->rss_grad(s.block(), p);
        CHECK(g.d_px == 0.0);
        CHECK(g.d_py == 0.0);
        CHECK(g.d_pz == 0.0);
        CHECK(g.d_log_eta != 0.0);
    }
}

TEST_CASE("avx2 matches scalar") {
    const kernels::KernelTable* simd = kernels::avx2();
    if (!simd) {
        MESSAGE("AVX2 kernel not available on this CPU/build; equivalence check skipped");
        return;
    }
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> le(-5.0, 40.0);
    std::uniform_real_distribution<double> al(1.0, 4.5);
    for (int trial = 0; trial < 2000; ++trial) {
        // Sizes cover the vector body and every tail length.
        const std::size_t n = static_cast<std::size_t>(trial % 41);
        const double spread = trial % 3 == 0 ? 5.0 : 4000.0;  // small spread exercises the clamp
        const Samples s = random_samples(rng, n, spread);
        const ModelParams p{0.3 * spread, -0.2 * spread, 0.0, le(rng), al(rng)};
        const auto a = kernels::scalar().rss_grad(s.block(), p);
        const auto b = simd->rss_grad(s.block(), p);
        const double scale = 1e-12 * (1.0 + a.rss);
        CHECK(close(a.rss, b.rss, 1e-12, scale));
        CHECK(close(a.d_log_eta, b.d_log_eta, 1e-11, scale));
        CHECK(close(a.d_px, b.d_px, 1e-11, scale));
        CHECK(close(a.d_py, b.d_py, 1e-11, scale));
        CHECK(close(a.d_pz, b.d_pz, 1e-11, scale));
        CHECK(close(kernels::scalar().rss(s.block(), p), simd->rss(s.block(), p), 1e-12, scale));
    }
}

TEST_CASE("avx2 handles extreme exponents") {
    const kernels::KernelTable* simd = kernels::avx2();
    if (!simd) return;
    std::mt19937_64 rng(14);
    const Samples s = random_samples(rng, 64, 4000.0);
    for (double log_eta : {-700.0, -50.0, 0.0, 60.0, 300.0, 700.0}) {
        const ModelParams p{1.0, 2.0, 0.0, log_eta, 2.0};
        const auto a = kernels::scalar().rss_grad(s.block(), p);
        const auto b = simd->rss_grad(s.block(), p);
        CHECK(std::isfinite(b.rss));
        CHECK(close(a.rss, b.rss, 1e-12, 1e-12));
        CHECK(close(a.d_log_eta, b.d_log_eta, 1e-10, 1e-12 * (1.0 + a.rss)));
    }
}

TEST_CASE("J^T J matches finite-difference residual partials") {
    std::mt19937_64 rng(15);
    const Samples s = random_samples(rng, 37, 1500.0);
    const ModelParams p{40.0, -70.0, 3.0, 14.0, 2.4};
    kernels::JtJ ref;
    for (std::size_t k = 0; k < s.e.size(); ++k) {
        double j[4];
        for (int c = 0; c < 4; ++c) {
            const double h = c == 3 ? 1e-6 : 1e-4;
            ModelParams hi = p, lo = p;
            double* hp[4] = {&hi.px, &hi.py, &hi.pz, &hi.log_eta};
            double* lp[4] = {&lo.px, &lo.py, &lo.pz, &lo.log_eta};
            *hp[c] += h;
            *lp[c] -= h;
            j[c] = (reference_residual(s, k, hi) - reference_residual(s, k, lo)) / (2.0 * h);
        }
        ref.xx += j[0] * j[0];
        ref.xy += j[0] * j[1];
        ref.xz += j[0] * j[2];
        ref.yy += j[1] * j[1];
        ref.yz += j[1] * j[2];
        ref.zz += j[2] * j[2];
        ref.xe += j[0] * j[3];
        ref.ye += j[1] * j[3];
        ref.ze += j[2] * j[3];
        ref.ee += j[3] * j[3];
    }
    for (const auto* k : {&kernels::scalar(), kernels::avx2()}) {
        if (!k) continue;
        const kernels::JtJ got = k->rss_grad(s.block(), p).jtj;
        const double pos_scale = 1e-6 * ref.xx + 1e-12;
        CHECK(close(got.xx, ref.xx, 1e-6, pos_scale));
        CHECK(close(got.xy, ref.xy, 1e-6, pos_scale));
        CHECK(close(got.xz, ref.xz, 1e-6, pos_scale));
        CHECK(close(got.yy, ref.yy, 1e-6, pos_scale));
        CHECK(close(got.yz, ref.yz, 1e-6, pos_scale));
        CHECK(close(got.zz, ref.zz, 1e-6, pos_scale));
        CHECK(close(got.xe, ref.xe, 1e-6, 1e-12));
        CHECK(close(got.ye, ref.ye, 1e-6, 1e-12));
        CHECK(close(got.ze, ref.ze, 1e-6, 1e-12));
        CHECK(close(got.ee, ref.ee, 1e-6, 1e-12));
    }
}

TEST_CASE("avx2 J^T J matches scalar") {
    const kernels::KernelTable* simd = kernels::avx2();
    if (!simd) return;
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> le(-5.0, 40.0);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = static_cast<std::size_t>(trial % 41);
        const double spread = trial % 3 == 0 ? 5.0 : 4000.0;
        const Samples s = random_samples(rng, n, spread);
        const ModelParams p{0.3 * spread, -0.2 * spread, 1.0, le(rng), 2.0 + 0.002 * trial};
        const kernels::JtJ a = kernels::scalar().rss_grad(s.block(), p).jtj;
        const kernels::JtJ b = simd->rss_grad(s.block(), p).jtj;
        const double scale = 1e-12 * (1.0 + a.ee + a.xx + a.yy + a.zz);
        for (auto m : {&kernels::JtJ::xx, &kernels::JtJ::xy, &kernels::JtJ::xz, &kernels::JtJ::yy,
                       &kernels::JtJ::yz, &kernels::JtJ::zz, &kernels::JtJ::xe, &kernels::JtJ::ye,
                       &kernels::JtJ::ze, &kernels::JtJ::ee}) {
            CHECK(close(a.*m, b.*m, 1e-11, scale));
        }
    }
}

TEST_CASE("active kernel is named") {
    const auto& k = kernels::active();
    CHECK((k.name == "scalar" || k.name == "avx2"));
    if (const char* env = std::getenv("JAMLOC_KERNEL"); env && std::string_view(env) == "scalar") {
        CHECK(k.name == "scalar");
    }
}

}
