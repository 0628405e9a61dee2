#pragma once

#include <span>
#include <vector>

#include "diffpath/common.hpp"

namespace diffpath {

// Higher score means more in-distribution.
struct ScoredSets {
    Vec inlier_scores;
    Vec outlier_scores;
};

// P(inlier > outlier) + 0.5 P(tie) over random pairs, computed from the
// Mann-Whitney rank statistic with average ranks for ties; O(n log n).
double auroc(const ScoredSets& sets);

// O(n*m) pairwise count with the same tie convention; test oracle.
double auroc_bruteforce(const ScoredSets& sets);

struct Histogram {
    Vec edges;                    // bins+1 ascending edges
    std::vector<long long> counts; // bins
    long long out_of_range = 0;
};

// Equal-width bins over [lo, hi]; values outside the range land in
// out_of_range. The last bin includes its right edge.
Histogram histogram(std::span<const double> values, int bins, double lo, double hi);

} // namespace diffpath
