#include "mses/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace mses {

namespace {

struct RankSummary {
  double rank_sum_a = 0.0;   // midrank sum of sample a
  double tie_term = 0.0;     // sum over tie groups of t^3 - t
  bool has_ties = false;
};

RankSummary midranks(const std::vector<double>& a,
                     const std::vector<double>& b) {
  struct Obs {
    double value;
    int group;
  };
  std::vector<Obs> pooled;
  pooled.reserve(a.size() + b.size());
  for (const double v : a) pooled.push_back({v, 0});
  for (const double v : b) pooled.push_back({v, 1});
  std::sort(pooled.begin(), pooled.end(),
            [](const Obs& x, const Obs& y) { return x.value < y.value; });

  RankSummary summary;
  size_t i = 0;
  while (i < pooled.size()) {
    size_t j = i;
    while (j < pooled.size() && pooled[j].value == pooled[i].value) ++j;
    const auto t = static_cast<double>(j - i);
    // Positions i+1..j (1-based) share the average rank.
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k) {
      if (pooled[k].group == 0) summary.rank_sum_a += midrank;
    }
    if (t > 1.0) {
      summary.has_ties = true;
      summary.tie_term += t * t * t - t;
    }
    i = j;
  }
  return summary;
}

// Exact two-sided p for the rank-sum of n ranks chosen from 1..N, by counting
// subsets per sum with a 0/1-knapsack recurrence. Counts stay below
// C(20, 10) = 184756, far inside 64-bit range.
double exact_two_sided_p(int n, int total, long long w) {
  const int max_sum = n * (2 * total - n + 1) / 2;
  std::vector<std::vector<std::uint64_t>> ways(
      static_cast<size_t>(n + 1),
      std::vector<std::uint64_t>(static_cast<size_t>(max_sum + 1), 0));
  ways[0][0] = 1;
  for (int r = 1; r <= total; ++r) {
    for (int k = std::min(n, r); k >= 1; --k) {
      for (int s = max_sum; s >= r; --s) {
        ways[static_cast<size_t>(k)][static_cast<size_t>(s)] +=
            ways[static_cast<size_t>(k - 1)][static_cast<size_t>(s - r)];
      }
    }
  }
  std::uint64_t count_total = 0, count_low = 0, count_high = 0;
  for (int s = 0; s <= max_sum; ++s) {
    const std::uint64_t c = ways[static_cast<size_t>(n)][static_cast<size_t>(s)];
    count_total += c;
    if (s <= w) count_low += c;
    if (s >= w) count_high += c;
  }
  const double tail = static_cast<double>(std::min(count_low, count_high)) /
                      static_cast<double>(count_total);
  return std::min(1.0, 2.0 * tail);
}

}  // namespace

WilcoxonResult wilcoxon_rank_sum(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("wilcoxon_rank_sum: samples must be non-empty");
  }
  const auto n = static_cast<int>(a.size());
  const auto m = static_cast<int>(b.size());
  const int total = n + m;
  const RankSummary summary = midranks(a, b);

  WilcoxonResult result;
  result.statistic = summary.rank_sum_a;

  if (total <= 20 && !summary.has_ties) {
    result.exact = true;
    result.p_value =
        exact_two_sided_p(n, total, std::llround(summary.rank_sum_a));
    return result;
  }

  const double nn = n, mm = m, tt = total;
  const double mu = nn * (tt + 1.0) / 2.0;
  const double variance =
      nn * mm / 12.0 *
      ((tt + 1.0) - summary.tie_term / (tt * (tt - 1.0)));
  if (variance <= 0.0) {
    result.p_value = 1.0;  // every observation tied
    return result;
  }
  double z = (std::abs(summary.rank_sum_a - mu) - 0.5) / std::sqrt(variance);
  if (z < 0.0) z = 0.0;
  result.p_value = std::erfc(z / std::sqrt(2.0));
  return result;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean: empty sample");
  double sum = 0.0;
  for (const double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double ss = 0.0;
  for (const double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty sample");
  std::sort(v.begin(), v.end());
  const size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace mses
