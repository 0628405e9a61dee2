#include "diffpath/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace diffpath {

namespace {

void check_sets(const ScoredSets& sets) {
    require(!sets.inlier_scores.empty() && !sets.outlier_scores.empty(),
            "both score sets must be nonempty");
    for (double v : sets.inlier_scores) require(std::isfinite(v), "non-finite inlier score");
    for (double v : sets.outlier_scores) require(std::isfinite(v), "non-finite outlier score");
}

} // namespace

double auroc(const ScoredSets& sets) {
    check_sets(sets);
    const std::size_t n_in = sets.inlier_scores.size();
    const std::size_t n_out = sets.outlier_scores.size();
    const std::size_t n = n_in + n_out;

    struct Entry {
        double score;
        bool inlier;
    };
    std::vector<Entry> entries;
    entries.reserve(n);
    for (double v : sets.inlier_scores) entries.push_back({v, true});
    for (double v : sets.outlier_scores) entries.push_back({v, false});
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.score < b.score; });

    // rank sum of inliers, average rank over tie groups
    double rank_sum_in = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && entries[j + 1].score == entries[i].score) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (entries[k].inlier) rank_sum_in += avg_rank;
        i = j + 1;
    }

    const double u = rank_sum_in - 0.5 * static_cast<double>(n_in) * static_cast<double>(n_in + 1);
    return u / (static_cast<double>(n_in) * static_cast<double>(n_out));
}

double auroc_bruteforce(const ScoredSets& sets) {
    check_sets(sets);
    double credit = 0.0;
    for (double in : sets.inlier_scores)
        for (double out : sets.outlier_scores) {
            if (in > out)
                credit += 1.0;
            else if (in == out)
                credit += 0.5;
        }
    return credit / (static_cast<double>(sets.inlier_scores.size()) *
                     static_cast<double>(sets.outlier_scores.size()));
}

Histogram histogram(std::span<const double> values, int bins, double lo, double hi) {
    require(bins >= 1, "need at least one bin");
    require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "invalid histogram range");
    Histogram h;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    const double width = (hi - lo) / bins;
    for (int b = 0; b <= bins; ++b) h.edges[static_cast<std::size_t>(b)] = lo + width * b;
    h.edges.back() = hi;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        if (v < lo || v > hi || !std::isfinite(v)) {
            ++h.out_of_range;
            continue;
        }
        auto b = static_cast<std::size_t>((v - lo) / width);
        if (b >= static_cast<std::size_t>(bins)) b = static_cast<std::size_t>(bins) - 1;
        ++h.counts[b];
    }
    return h;
}

} // namespace diffpath
