// Double-precision log/exp for 4-wide AVX2 lanes (Cephes rational
// approximations). Only included from translation units built with
// -mavx2 -mfma.
#pragma once

#include <immintrin.h>

namespace jamloc::kernels::avx2_math {

inline __m256d broadcast(double v) { return _mm256_set1_pd(v); }

inline __m256d fmadd(__m256d a, __m256d b, __m256d c) { return _mm256_fmadd_pd(a, b, c); }

/// Natural log for positive normal inputs.
inline __m256d log(__m256d x) {
    const __m256i bits = _mm256_castpd_si256(x);
    const __m256i exp_field = _mm256_srli_epi64(bits, 52);
    // exponent field -> double via the 2^52 magic-number trick
    const __m256d magic = broadcast(4503599627370496.0);
    __m256d e = _mm256_sub_pd(
        _mm256_castsi256_pd(_mm256_or_si256(exp_field, _mm256_castpd_si256(magic))), magic);
    e = _mm256_sub_pd(e, broadcast(1022.0));

    const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
    const __m256i half_exp = _mm256_set1_epi64x(0x3FE0000000000000LL);
    __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), half_exp));

    // m in [0.5, 1); fold to [sqrt(0.5), sqrt(2)) - 1
    const __m256d below = _mm256_cmp_pd(m, broadcast(0.70710678118654752440), _CMP_LT_OQ);
    e = _mm256_sub_pd(e, _mm256_and_pd(below, broadcast(1.0)));
    m = _mm256_sub_pd(_mm256_add_pd(m, _mm256_and_pd(below, m)), broadcast(1.0));

    const __m256d z = _mm256_mul_pd(m, m);

    __m256d p = broadcast(1.01875663804580931796E-4);
    p = fmadd(p, m, broadcast(4.97494994976747001425E-1));
    p = fmadd(p, m, broadcast(4.70579119878881725854E0));
    p = fmadd(p, m, broadcast(1.44989225341610930846E1));
    p = fmadd(p, m, broadcast(1.79368678507819816313E1));
    p = fmadd(p, m, broadcast(7.70838733755885391666E0));

    __m256d q = _mm256_add_pd(m, broadcast(1.12873587189167450590E1));
    q = fmadd(q, m, broadcast(4.52279145837532221105E1));
    q = fmadd(q, m, broadcast(8.29875266912776603211E1));
    q = fmadd(q, m, broadcast(7.11544750618563894466E1));
    q = fmadd(q, m, broadcast(2.31251620126765340583E1));

    __m256d y = _mm256_mul_pd(m, _mm256_div_pd(_mm256_mul_pd(z, p), q));
    y = fmadd(e, broadcast(-2.121944400546905827679e-4), y);
    y = fmadd(z, broadcast(-0.5), y);
    __m256d r = _mm256_add_pd(m, y);
    return fmadd(e, broadcast(0.693359375), r);
}

/// log(1 + u) for u >= 0, with the rounding error of 1 + u compensated.
inline __m256d log1p(__m256d u) {
    const __m256d one = broadcast(1.0);
    const __m256d y = _mm256_add_pd(one, u);
    const __m256d err = _mm256_sub_pd(_mm256_sub_pd(y, one), u);
    return _mm256_sub_pd(log(y), _mm256_div_pd(err, y));
}

/// exp(x), saturating at exp(709) and flushing to 0 below -708.
inline __m256d exp(__m256d x) {
    const __m256d in_range = _mm256_cmp_pd(x, broadcast(-708.0), _CMP_GE_OQ);
    x = _mm256_max_pd(_mm256_min_pd(x, broadcast(709.0)), broadcast(-708.0));
    const __m256d n = _mm256_round_pd(fmadd(x, broadcast(1.4426950408889634073599), broadcast(0.5)),
                                      _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
    x = fmadd(n, broadcast(-6.93145751953125E-1), x);
    x = fmadd(n, broadcast(-1.42860682030941723212E-6), x);
    const __m256d xx = _mm256_mul_pd(x, x);

    __m256d p = broadcast(1.26177193074810590878E-4);
    p = fmadd(p, xx, broadcast(3.02994407707441961300E-2));
    p = fmadd(p, xx, broadcast(9.99999999999999999910E-1));
    p = _mm256_mul_pd(p, x);

    __m256d q = broadcast(3.00198505138664455042E-6);
    q = fmadd(q, xx, broadcast(2.52448340349684104192E-3));
    q = fmadd(q, xx, broadcast(2.27265548208155028766E-1));
    q = fmadd(q, xx, broadcast(2.00000000000000000009E0));

    __m256d r = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    r = fmadd(broadcast(2.0), r, broadcast(1.0));

    // scale by 2^n
    const __m128i n32 = _mm256_cvtpd_epi32(n);
    __m256i n64 = _mm256_cvtepi32_epi64(n32);
    n64 = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    return _mm256_and_pd(in_range, _mm256_mul_pd(r, _mm256_castsi256_pd(n64)));
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace jamloc::kernels::avx2_math
