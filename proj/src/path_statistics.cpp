#include "diffpath/path_statistics.hpp"

#include <cmath>
#include <string>

#include "diffpath/kernels.hpp"

namespace diffpath {

std::string_view stat_kind_name(StatKind kind) {
    switch (kind) {
    case StatKind::first_order_1d: return "first_order";
    case StatKind::curvature_1d: return "1d";
    case StatKind::six_d: return "6d";
    }
    return "?";
}

StatKind stat_kind_from_name(std::string_view name) {
    if (name == "first_order") return StatKind::first_order_1d;
    if (name == "1d") return StatKind::curvature_1d;
    if (name == "6d") return StatKind::six_d;
    throw std::invalid_argument("unknown statistic kind: " + std::string(name));
}

int stat_kind_width(StatKind kind) { return kind == StatKind::six_d ? 6 : 1; }

double signed_power_sum(std::span<const double> v, int p) {
    require(p >= 1 && p <= 3, "power must be in {1,2,3}");
    double sums[3] = {0.0, 0.0, 0.0};
    kernels::power_sums123(v, sums);
    return sums[p - 1];
}

namespace {

// Neumaier-compensated accumulator for the sums over timesteps; the signed
// first-power sums can cancel heavily.
struct Compensated {
    double sum = 0.0;
    double comp = 0.0;
    void add(double value) {
        const double t = sum + value;
        if (std::abs(sum) >= std::abs(value))
            comp += (sum - t) + value;
        else
            comp += (value - t) + sum;
        sum = t;
    }
    double get() const { return sum + comp; }
};

double sum_of_row_sumsq(const Matrix& rows) {
    Compensated acc;
    for (std::size_t n = 0; n < rows.rows(); ++n) acc.add(kernels::sumsq(rows.row(n)));
    return acc.get();
}

void accumulate_power_sums(const Matrix& rows, Compensated out[3]) {
    for (std::size_t n = 0; n < rows.rows(); ++n) {
        double sums[3] = {0.0, 0.0, 0.0};
        kernels::power_sums123(rows.row(n), sums);
        out[0].add(sums[0]);
        out[1].add(sums[1]);
        out[2].add(sums[2]);
    }
}

void check_nonempty(const Trajectory& traj) {
    require(traj.states.rows() > 0, "empty trajectory");
}

} // namespace

PathStatistic first_order_statistic(const Trajectory& traj) {
    check_nonempty(traj);
    return {StatKind::first_order_1d, {std::sqrt(sum_of_row_sumsq(traj.epsilons))}};
}

PathStatistic curvature_statistic(const Trajectory& traj) {
    check_nonempty(traj);
    return {StatKind::curvature_1d, {std::sqrt(sum_of_row_sumsq(traj.eps_time_derivs))}};
}

PathStatistic six_d_statistic(const Trajectory& traj) {
    check_nonempty(traj);
    Compensated eps_sums[3], deriv_sums[3];
    accumulate_power_sums(traj.epsilons, eps_sums);
    accumulate_power_sums(traj.eps_time_derivs, deriv_sums);
    PathStatistic stat{StatKind::six_d, Vec(6)};
    for (int p = 0; p < 3; ++p) {
        stat.values[static_cast<std::size_t>(p)] = eps_sums[p].get();
        stat.values[static_cast<std::size_t>(p + 3)] = deriv_sums[p].get();
    }
    return stat;
}

PathStatistic compute_statistic(const Trajectory& traj, StatKind kind) {
    switch (kind) {
    case StatKind::first_order_1d: return first_order_statistic(traj);
    case StatKind::curvature_1d: return curvature_statistic(traj);
    case StatKind::six_d: return six_d_statistic(traj);
    }
    throw std::invalid_argument("unknown statistic kind");
}

} // namespace diffpath
