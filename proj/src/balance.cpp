#include "colog/balance.hpp"

#include <algorithm>
#include <limits>

#include "colog/errors.hpp"

namespace colog {

namespace {

// Nearest neighbor among `active` rows, ties broken by lowest index.
std::size_t nearest_neighbor(const Eigen::MatrixXd& points,
                             const std::vector<std::size_t>& active, std::size_t self_pos) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_idx = active[self_pos == 0 ? 1 : 0];
  const auto self_row = points.row(static_cast<Eigen::Index>(active[self_pos]));
  for (std::size_t p = 0; p < active.size(); ++p) {
    if (p == self_pos) continue;
    const double d2 =
        (points.row(static_cast<Eigen::Index>(active[p])) - self_row).squaredNorm();
    if (d2 < best || (d2 == best && active[p] < best_idx)) {
      best = d2;
      best_idx = active[p];
    }
  }
  return best_idx;
}

std::vector<std::pair<std::size_t, std::size_t>> links_among(
    const Eigen::MatrixXd& points, const std::vector<int>& labels,
    const std::vector<std::size_t>& active) {
  std::vector<std::pair<std::size_t, std::size_t>> links;
  if (active.size() < 2) return links;
  std::vector<std::size_t> nn(active.size());
  for (std::size_t p = 0; p < active.size(); ++p) nn[p] = nearest_neighbor(points, active, p);
  // Map original index -> position for the mutuality check.
  std::vector<std::size_t> pos_of(points.rows(), static_cast<std::size_t>(-1));
  for (std::size_t p = 0; p < active.size(); ++p) pos_of[active[p]] = p;
  for (std::size_t p = 0; p < active.size(); ++p) {
    const std::size_t i = active[p];
    const std::size_t j = nn[p];
    if (j < i) continue;  // emit each unordered pair once, from its low end
    const std::size_t q = pos_of[j];
    if (nn[q] != i) continue;
    if (labels[i] == labels[j]) continue;
    links.emplace_back(i, j);
  }
  return links;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> find_tomek_links(
    const Eigen::MatrixXd& points, const std::vector<int>& labels) {
  if (points.rows() != static_cast<Eigen::Index>(labels.size()))
    throw DataError("find_tomek_links: points/labels size mismatch");
  std::vector<std::size_t> active(points.rows());
  for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;
  return links_among(points, labels, active);
}

UndersampleResult undersample(const Eigen::MatrixXd& points, const std::vector<int>& labels) {
  if (points.rows() != static_cast<Eigen::Index>(labels.size()))
    throw DataError("undersample: points/labels size mismatch");
  UndersampleResult result;
  std::vector<std::size_t> active(points.rows());
  for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;

  while (true) {
    long count0 = 0, count1 = 0;
    for (std::size_t i : active) (labels[i] == 0 ? count0 : count1)++;
    if (count0 == 0 || count1 == 0 || count0 == count1) break;  // nothing to balance
    const int majority = count1 > count0 ? 1 : 0;
    long headroom = std::max(count0, count1) - std::min(count0, count1);

    const auto links = links_among(points, labels, active);
    if (links.empty()) break;

    std::vector<std::size_t> to_remove;
    for (const auto& [i, j] : links) {
      const std::size_t victim = labels[i] == majority ? i : j;
      to_remove.push_back(victim);
    }
    std::sort(to_remove.begin(), to_remove.end());
    to_remove.erase(std::unique(to_remove.begin(), to_remove.end()), to_remove.end());
    // Never push the majority below the minority count.
    if (static_cast<long>(to_remove.size()) > headroom)
      to_remove.resize(static_cast<std::size_t>(headroom));
    if (to_remove.empty()) break;

    std::vector<std::size_t> next;
    next.reserve(active.size() - to_remove.size());
    std::size_t r = 0;
    for (std::size_t i : active) {
      if (r < to_remove.size() && to_remove[r] == i) {
        result.removed.push_back(i);
        ++r;
      } else {
        next.push_back(i);
      }
    }
    active.swap(next);
    ++result.rounds;
  }

  result.kept = std::move(active);
  return result;
}

}  // namespace colog
