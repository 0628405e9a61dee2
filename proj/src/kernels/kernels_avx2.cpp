#include "diffpath/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

// AVX2+FMA kernels, 4 doubles per vector. Reductions keep independent lane
// accumulators and combine at the end; tails fall back to scalar.

namespace diffpath::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

inline double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_max_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double total = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

double sum_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    double total = hsum(acc);
    for (; i < n; ++i) total += a[i];
    return total;
}

double sumsq_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(a + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double total = hsum(acc);
    for (; i < n; ++i) total += a[i] * a[i];
    return total;
}

double max_avx2(const double* a, std::size_t n) {
    if (n < 4) {
        double m = a[0];
        for (std::size_t i = 1; i < n; ++i)
            if (a[i] > m) m = a[i];
        return m;
    }
    __m256d best = _mm256_loadu_pd(a);
    std::size_t i = 4;
    for (; i + 4 <= n; i += 4) best = _mm256_max_pd(best, _mm256_loadu_pd(a + i));
    double m = hmax(best);
    for (; i < n; ++i)
        if (a[i] > m) m = a[i];
    return m;
}

double sqdist_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double total = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        total += d * d;
    }
    return total;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal_avx2(double alpha, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

void power_sums123_avx2(const double* a, std::size_t n, double out[3]) {
    __m256d s1 = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd();
    __m256d s3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d x = _mm256_loadu_pd(a + i);
        const __m256d x2 = _mm256_mul_pd(x, x);
        s1 = _mm256_add_pd(s1, x);
        s2 = _mm256_add_pd(s2, x2);
        s3 = _mm256_fmadd_pd(x2, x, s3);
    }
    double t1 = hsum(s1), t2 = hsum(s2), t3 = hsum(s3);
    for (; i < n; ++i) {
        const double x = a[i];
        const double x2 = x * x;
        t1 += x;
        t2 += x2;
        t3 += x2 * x;
    }
    out[0] += t1;
    out[1] += t2;
    out[2] += t3;
}

bool cpu_has_avx2_fma() {
#if defined(__GNUC__) || defined(__clang__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

} // namespace

const Ops* avx2_ops() {
    static const bool supported = cpu_has_avx2_fma();
    if (!supported) return nullptr;
    static const Ops ops{
        "avx2",    dot_avx2,  sum_avx2,  sumsq_avx2,
        max_avx2,  sqdist_avx2, axpy_avx2, scal_avx2,
        power_sums123_avx2,
    };
    return &ops;
}

} // namespace diffpath::kernels

#else

namespace diffpath::kernels {
const Ops* avx2_ops() { return nullptr; }
} // namespace diffpath::kernels

#endif
