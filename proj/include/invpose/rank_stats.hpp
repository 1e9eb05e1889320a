// Rank statistics for the benchmark reports: two-sided Mann-Whitney U test
// (exact enumeration for small samples, tie-corrected normal approximation
// otherwise) and sample quantiles.

#ifndef INVPOSE_RANK_STATS_HPP
#define INVPOSE_RANK_STATS_HPP

#include <span>

namespace invpose {

struct MannWhitneyResult {
  double u;  ///< U statistic of the first sample (midrank ties)
  double p;  ///< two-sided p-value
};

/// U_a = (rank sum of a) - n_a(n_a+1)/2 with midranks for ties. For
/// n_a + n_b <= 12 the p-value is computed by exhaustive enumeration of all
/// group assignments; larger samples use the normal approximation with
/// tie-corrected variance and continuity correction. Samples must be
/// nonempty.
MannWhitneyResult mann_whitney_u(std::span<const double> sample_a,
                                 std::span<const double> sample_b);

/// Type-7 (linear interpolation) sample quantile, q in [0, 1]. Values must
/// be nonempty; they are copied and sorted internally.
double quantile(std::span<const double> values, double q);

}  // namespace invpose

#endif  // INVPOSE_RANK_STATS_HPP
