#include "diffpath/kernels.hpp"

// Reference kernels. Plain loops, one accumulator, no reassociation: this is
// the behavior the SIMD variants are tested against.

namespace diffpath::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

double sumsq_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

double max_scalar(const double* a, std::size_t n) {
    double m = a[0];
    for (std::size_t i = 1; i < n; ++i)
        if (a[i] > m) m = a[i];
    return m;
}

double sqdist_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void power_sums123_scalar(const double* a, std::size_t n, double out[3]) {
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = a[i];
        const double x2 = x * x;
        s1 += x;
        s2 += x2;
        s3 += x2 * x;
    }
    out[0] += s1;
    out[1] += s2;
    out[2] += s3;
}

} // namespace

const Ops& scalar_ops() {
    static const Ops ops{
        "scalar",    dot_scalar,  sum_scalar,  sumsq_scalar,
        max_scalar,  sqdist_scalar, axpy_scalar, scal_scalar,
        power_sums123_scalar,
    };
    return ops;
}

} // namespace diffpath::kernels
