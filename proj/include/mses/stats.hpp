#pragma once

#include <vector>

namespace mses {

struct WilcoxonResult {
  double statistic = 0.0;  // rank sum of sample a, midranks for ties
  double p_value = 1.0;    // two-sided
  bool exact = false;      // true when the enumeration branch was used
};

// Two-sample Wilcoxon rank-sum test. Ranks are midranks under ties. The
// p-value is exact (full null enumeration via dynamic programming) when
// n + m <= 20 and the pooled sample has no ties; otherwise the normal
// approximation with tie and continuity corrections is used.
WilcoxonResult wilcoxon_rank_sum(const std::vector<double>& a,
                                 const std::vector<double>& b);

double mean(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);  // n-1 denominator
double median(std::vector<double> v);

}  // namespace mses
