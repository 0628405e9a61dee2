#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "diffpath/common.hpp"
#include "diffpath/ddim_path.hpp"

namespace diffpath {

enum class StatKind { first_order_1d, curvature_1d, six_d };

std::string_view stat_kind_name(StatKind kind);   // "first_order", "1d", "6d"
StatKind stat_kind_from_name(std::string_view name);
int stat_kind_width(StatKind kind);

struct PathStatistic {
    StatKind kind;
    Vec values; // length 1 or 6
};

// sum_i v_i^p with the sign kept; p in {1, 2, 3}.
double signed_power_sum(std::span<const double> v, int p);

// sqrt(sum over all nfe nodes of ||eps||^2)
PathStatistic first_order_statistic(const Trajectory& traj);

// sqrt(sum over the nfe-1 derivative entries of ||d_t eps||^2)
PathStatistic curvature_statistic(const Trajectory& traj);

// [sum<eps>_1, sum<eps>_2, sum<eps>_3, sum<d_t eps>_1, sum<d_t eps>_2,
//  sum<d_t eps>_3]; raw sums, no normalization by dimension or nfe.
PathStatistic six_d_statistic(const Trajectory& traj);

PathStatistic compute_statistic(const Trajectory& traj, StatKind kind);

} // namespace diffpath
