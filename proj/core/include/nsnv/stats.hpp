#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace nsnv {

double mean(std::span<const double> xs);
// Standard error of the mean (sample stdev / sqrt n); 0 for fewer than two values.
double standard_error(std::span<const double> xs);

// 1-based ranks with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> xs);
// Pearson correlation of the average ranks; 0 when either side is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

// Two-sample Kolmogorov-Smirnov statistic and its asymptotic p-value.
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace nsnv
