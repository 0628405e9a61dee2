#include "diffpath/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

// NEON kernels, 2 doubles per vector.

namespace diffpath::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    double total = vaddvq_f64(acc);
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

double sum_neon(const double* a, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(a + i));
    double total = vaddvq_f64(acc);
    for (; i < n; ++i) total += a[i];
    return total;
}

double sumsq_neon(const double* a, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t v = vld1q_f64(a + i);
        acc = vfmaq_f64(acc, v, v);
    }
    double total = vaddvq_f64(acc);
    for (; i < n; ++i) total += a[i] * a[i];
    return total;
}

double max_neon(const double* a, std::size_t n) {
    if (n < 2) return a[0];
    float64x2_t best = vld1q_f64(a);
    std::size_t i = 2;
    for (; i + 2 <= n; i += 2) best = vmaxq_f64(best, vld1q_f64(a + i));
    double m = vmaxvq_f64(best);
    for (; i < n; ++i)
        if (a[i] > m) m = a[i];
    return m;
}

double sqdist_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vfmaq_f64(acc, d, d);
    }
    double total = vaddvq_f64(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        total += d * d;
    }
    return total;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal_neon(double alpha, double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

void power_sums123_neon(const double* a, std::size_t n, double out[3]) {
    float64x2_t s1 = vdupq_n_f64(0.0);
    float64x2_t s2 = vdupq_n_f64(0.0);
    float64x2_t s3 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t x = vld1q_f64(a + i);
        const float64x2_t x2 = vmulq_f64(x, x);
        s1 = vaddq_f64(s1, x);
        s2 = vaddq_f64(s2, x2);
        s3 = vfmaq_f64(s3, x2, x);
    }
    double t1 = vaddvq_f64(s1), t2 = vaddvq_f64(s2), t3 = vaddvq_f64(s3);
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

} // namespace

const Ops* neon_ops() {
    static const Ops ops{
        "neon",    dot_neon,  sum_neon,  sumsq_neon,
        max_neon,  sqdist_neon, axpy_neon, scal_neon,
        power_sums123_neon,
    };
    return &ops;
}

} // namespace diffpath::kernels

#else

namespace diffpath::kernels {
const Ops* neon_ops() { return nullptr; }
} // namespace diffpath::kernels

#endif
