#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace colog {

// A Tomek link is a cross-class mutual-nearest-neighbor pair (Euclidean
// metric, nearest-neighbor ties broken by lowest index). Each unordered pair
// is listed once, (i, j) with i < j. Fewer than 2 points yields no links.
std::vector<std::pair<std::size_t, std::size_t>> find_tomek_links(
    const Eigen::MatrixXd& points, const std::vector<int>& labels);

struct UndersampleResult {
  std::vector<std::size_t> kept;     // original indices, ascending
  std::vector<std::size_t> removed;  // original indices, ascending
  int rounds = 0;
};

// Iteratively removes the majority-class member of each Tomek link until no
// links remain. Minority samples are never removed, and the majority is never
// reduced below the minority count.
UndersampleResult undersample(const Eigen::MatrixXd& points, const std::vector<int>& labels);

}  // namespace colog
