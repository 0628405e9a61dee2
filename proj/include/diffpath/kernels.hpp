#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace diffpath::kernels {

// Dispatch table for the dense double-precision inner loops (score
// evaluations, mixture responsibilities, power sums, network layers).
// One scalar reference implementation always exists; SIMD variants are
// compiled per architecture and selected once at startup from CPU
// capabilities. Variants may associate additions differently, so results
// agree with the reference to rounding error, not bitwise; the equivalence
// tests pin that bound.
struct Ops {
    const char* name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* a, std::size_t n);
    double (*sumsq)(const double* a, std::size_t n);
    double (*max)(const double* a, std::size_t n); // n >= 1
    double (*sqdist)(const double* a, const double* b, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n); // y += alpha*x
    void (*scal)(double alpha, double* x, std::size_t n);                  // x *= alpha
    // out[0] += sum x_i, out[1] += sum x_i^2, out[2] += sum x_i^3
    void (*power_sums123)(const double* a, std::size_t n, double out[3]);
};

const Ops& scalar_ops();
const Ops* avx2_ops(); // nullptr when not compiled in or CPU lacks AVX2+FMA
const Ops* neon_ops(); // nullptr off aarch64

const Ops& active();
void set_active(const Ops& ops); // test hook / --kernels override
bool select_by_name(const char* name);

// All variants usable on this machine, scalar first.
std::vector<const Ops*> available();

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}
inline double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }
inline double sumsq(std::span<const double> a) { return active().sumsq(a.data(), a.size()); }
inline double max(std::span<const double> a) { return active().max(a.data(), a.size()); }
inline double sqdist(std::span<const double> a, std::span<const double> b) {
    return active().sqdist(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void scal(double alpha, std::span<double> x) { active().scal(alpha, x.data(), x.size()); }
inline void power_sums123(std::span<const double> a, double out[3]) {
    active().power_sums123(a.data(), a.size(), out);
}

} // namespace diffpath::kernels
