#include <doctest.h>

#include <algorithm>
#include <limits>

#include "colog/balance.hpp"
#include "colog/rng.hpp"

using namespace colog;

namespace {

// Independent brute-force oracle: per point, scan all others for the nearest
// neighbor (ties to the lowest index), then filter mutual cross-class pairs.
std::vector<std::pair<std::size_t, std::size_t>> tomek_oracle(const Eigen::MatrixXd& points,
                                                              const std::vector<int>& labels) {
  const std::size_t n = static_cast<std::size_t>(points.rows());
  std::vector<std::size_t> nn(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = i;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (Eigen::Index c = 0; c < points.cols(); ++c) {
        const double diff = points(static_cast<Eigen::Index>(i), c) -
                            points(static_cast<Eigen::Index>(j), c);
        d2 += diff * diff;
      }
      if (d2 < best) {
        best = d2;
        best_j = j;
      }
    }
    nn[i] = best_j;
  }
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (nn[i] == j && nn[j] == i && labels[i] != labels[j]) links.emplace_back(i, j);
  return links;
}

Eigen::MatrixXd random_points(Rng& rng, int n, int dims) {
  Eigen::MatrixXd points(n, dims);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dims; ++d) points(i, d) = rng.uniform(-1.0, 1.0);
  return points;
}

}  // namespace

TEST_CASE("hand example: one link between the closest cross-class pair") {
  Eigen::MatrixXd points(3, 2);
  points << 0, 0, 2, 0, 1.1, 0;  // A = {0,1} majority, B = {2}
  const std::vector<int> labels = {1, 1, 0};
  const auto links = find_tomek_links(points, labels);
  REQUIRE(links.size() == 1);
  CHECK(links[0].first == 1);
  CHECK(links[0].second == 2);
}

TEST_CASE("all points in one class yield no links") {
  Eigen::MatrixXd points(4, 2);
  points << 0, 0, 1, 0, 0, 1, 1, 1;
  CHECK(find_tomek_links(points, {1, 1, 1, 1}).empty());
}

TEST_CASE("two points of different classes are forced mutual neighbors") {
  Eigen::MatrixXd points(2, 2);
  points << 0, 0, 3, 4;
  const auto links = find_tomek_links(points, {0, 1});
  REQUIRE(links.size() == 1);
}

TEST_CASE("fewer than two points yield an empty list") {
  Eigen::MatrixXd one(1, 2);
  one << 0.5, 0.5;
  CHECK(find_tomek_links(one, {0}).empty());
  CHECK(find_tomek_links(Eigen::MatrixXd(0, 2), {}).empty());
}

TEST_CASE("find_tomek_links matches the brute-force oracle on random points") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Eigen::MatrixXd points = random_points(rng, 200, 2);
    std::vector<int> labels(200);
    for (auto& l : labels) l = rng.uniform() < 0.7 ? 1 : 0;
    CHECK(find_tomek_links(points, labels) == tomek_oracle(points, labels));
  }
}

TEST_CASE("undersample hand trace: stop rule protects the last majority point") {
  Eigen::MatrixXd points(3, 2);
  points << 0, 0, 2, 0, 1.1, 0;
  const std::vector<int> labels = {1, 1, 0};  // class 1 is the majority
  const UndersampleResult r = undersample(points, labels);
  // round 1 removes (2,0); then counts are equal and balancing stops
  CHECK(r.removed == std::vector<std::size_t>{1});
  CHECK(r.kept == std::vector<std::size_t>{0, 2});
}

TEST_CASE("a link-free set is a fixed point") {
  Eigen::MatrixXd points(4, 2);
  points << 0, 0, 0.1, 0, 10, 10, 10.1, 10;  // two tight same-class pairs
  const std::vector<int> labels = {1, 1, 0, 0};
  const UndersampleResult r = undersample(points, labels);
  CHECK(r.removed.empty());
  CHECK(r.kept.size() == 4);
}

TEST_CASE("duplicate points across classes: majority member removed") {
  Eigen::MatrixXd points(3, 2);
  points << 1, 1, 1, 1, 5, 5;
  const std::vector<int> labels = {1, 0, 1};
  const UndersampleResult r = undersample(points, labels);
  // the duplicate pair is a link; the majority (class 1) member goes
  CHECK(std::find(r.removed.begin(), r.removed.end(), 0) != r.removed.end());
  CHECK(std::find(r.kept.begin(), r.kept.end(), 1) != r.kept.end());
}

TEST_CASE("undersample never removes minority samples and keeps majority >= minority") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    Rng rng(seed);
    const int n = 120;
    const Eigen::MatrixXd points = random_points(rng, n, 3);
    std::vector<int> labels(n);
    for (auto& l : labels) l = rng.uniform() < 0.8 ? 1 : 0;
    const long minority_before = std::count(labels.begin(), labels.end(), 0);
    if (minority_before == 0) continue;
    const UndersampleResult r = undersample(points, labels);
    for (std::size_t idx : r.removed) CHECK(labels[idx] == 1);
    long kept0 = 0, kept1 = 0;
    for (std::size_t idx : r.kept) (labels[idx] == 0 ? kept0 : kept1)++;
    CHECK(kept0 == minority_before);
    CHECK(kept1 >= kept0);
  }
}

TEST_CASE("undersample is deterministic under fixed input order") {
  Rng rng(5);
  const Eigen::MatrixXd points = random_points(rng, 80, 2);
  std::vector<int> labels(80);
  for (auto& l : labels) l = rng.uniform() < 0.75 ? 1 : 0;
  const UndersampleResult a = undersample(points, labels);
  const UndersampleResult b = undersample(points, labels);
  CHECK(a.kept == b.kept);
  CHECK(a.removed == b.removed);
}
