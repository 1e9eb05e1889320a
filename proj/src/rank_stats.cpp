#include "invpose/rank_stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace invpose {

namespace {

// U statistic of group a against group b by pair counting (ties count 1/2).
double u_by_pairs(std::span<const double> a, std::span<const double> b) {
  double u = 0.0;
  for (double x : a) {
    for (double y : b) {
      if (x > y)
        u += 1.0;
      else if (x == y)
        u += 0.5;
    }
  }
  return u;
}

// Exact two-sided p: enumerate all C(n, n_a) assignments of the pooled
// values to group a and tally the permutation distribution of U.
double exact_two_sided_p(std::span<const double> a, std::span<const double> b, double u_obs) {
  const std::size_t n_a = a.size();
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();

  std::vector<std::size_t> pick(n_a);
  for (std::size_t i = 0; i < n_a; ++i) pick[i] = i;

  double total = 0.0, le = 0.0, ge = 0.0;
  std::vector<double> ga(n_a), gb(n - n_a);
  std::vector<char> in_a(n);
  while (true) {
    std::fill(in_a.begin(), in_a.end(), 0);
    for (std::size_t i = 0; i < n_a; ++i) {
      ga[i] = pooled[pick[i]];
      in_a[pick[i]] = 1;
    }
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_a[i]) gb[j++] = pooled[i];
    }
    const double u = u_by_pairs(ga, gb);
    total += 1.0;
    if (u <= u_obs + 1e-9) le += 1.0;
    if (u >= u_obs - 1e-9) ge += 1.0;

    // next combination
    std::size_t k = n_a;
    while (k > 0) {
      --k;
      if (pick[k] != k + n - n_a) {
        ++pick[k];
        for (std::size_t i = k + 1; i < n_a; ++i) pick[i] = pick[i - 1] + 1;
        break;
      }
      if (k == 0) return std::min(1.0, 2.0 * std::min(le, ge) / total);
    }
    if (n_a == 0) break;
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> sample_a,
                                 std::span<const double> sample_b) {
  if (sample_a.empty() || sample_b.empty())
    throw std::invalid_argument("mann_whitney_u: samples must be nonempty");

  const double n_a = static_cast<double>(sample_a.size());
  const double n_b = static_cast<double>(sample_b.size());
  const double u_a = u_by_pairs(sample_a, sample_b);

  MannWhitneyResult res;
  res.u = u_a;

  if (sample_a.size() + sample_b.size() <= 12) {
    res.p = exact_two_sided_p(sample_a, sample_b, u_a);
    return res;
  }

  // Normal approximation with tie-corrected variance.
  const double n = n_a + n_b;
  std::map<double, double> tie_counts;
  for (double x : sample_a) tie_counts[x] += 1.0;
  for (double x : sample_b) tie_counts[x] += 1.0;
  double tie_term = 0.0;
  for (const auto& [value, count] : tie_counts) {
    (void)value;
    tie_term += count * count * count - count;
  }
  const double variance = n_a * n_b / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (variance <= 0.0) {
    res.p = 1.0;
    return res;
  }
  const double mean = 0.5 * n_a * n_b;
  const double z = std::max(std::abs(u_a - mean) - 0.5, 0.0) / std::sqrt(variance);
  res.p = std::min(1.0, 2.0 * normal_sf(z));
  return res;
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  q = std::clamp(q, 0.0, 1.0);
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace invpose
