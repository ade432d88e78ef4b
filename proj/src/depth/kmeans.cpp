#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "lcm/depth.hpp"
#include "lcm/errors.hpp"

namespace lcm {
namespace {

constexpr int kMaxIterations = 100;

std::uint8_t nearest(double v, std::span<const double> centroids) {
  std::uint8_t best = 0;
  double best_d = std::abs(v - centroids[0]);
  for (std::size_t c = 1; c < centroids.size(); ++c) {
    const double d = std::abs(v - centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint8_t>(c);
    }
  }
  return best;
}

// Lloyd iterations from the given centroids; empty clusters keep their centroid.
KMeansResult lloyd(std::span<const double> values, std::vector<double> centroids) {
  KMeansResult r;
  r.assignments.assign(values.size(), 0);
  for (std::size_t i = 0; i < values.size(); ++i) r.assignments[i] = nearest(values[i], centroids);
  for (r.iterations = 1; r.iterations <= kMaxIterations; ++r.iterations) {
    std::vector<double> sum(centroids.size(), 0.0);
    std::vector<std::size_t> n(centroids.size(), 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
      sum[r.assignments[i]] += values[i];
      ++n[r.assignments[i]];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c)
      if (n[c] > 0) centroids[c] = sum[c] / static_cast<double>(n[c]);
    bool changed = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto a = nearest(values[i], centroids);
      changed |= a != r.assignments[i];
      r.assignments[i] = a;
    }
    if (!changed) break;
  }
  r.iterations = std::min(r.iterations, kMaxIterations);
  r.centroids = std::move(centroids);
  return r;
}

std::vector<double> cluster_means(std::span<const double> values, std::span<const std::uint8_t> assignments, int k) {
  std::vector<double> sum(k, 0.0);
  std::vector<std::size_t> n(k, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum[assignments[i]] += values[i];
    ++n[assignments[i]];
  }
  for (int c = 0; c < k; ++c) sum[c] = n[c] ? sum[c] / static_cast<double>(n[c]) : 0.0;
  return sum;
}

// Relabels clusters so centroids ascend.
void sort_clusters(KMeansResult& r) {
  const auto k = r.centroids.size();
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return r.centroids[a] < r.centroids[b]; });
  std::vector<std::uint8_t> rank(k);
  std::vector<double> sorted(k);
  for (std::size_t i = 0; i < k; ++i) {
    rank[idx[i]] = static_cast<std::uint8_t>(i);
    sorted[i] = r.centroids[idx[i]];
  }
  for (auto& a : r.assignments) a = rank[a];
  r.centroids = std::move(sorted);
}

void require_spread(std::span<const double> values, std::size_t distinct_needed) {
  if (values.size() < distinct_needed) fail(ErrorCode::DegenerateInput, "too few values to cluster");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const auto distinct = static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
  if (distinct < distinct_needed) fail(ErrorCode::DegenerateInput, "fewer distinct values than clusters");
  for (double x : values)
    if (!std::isfinite(x)) fail(ErrorCode::InvalidArgument, "non-finite value");
}

}  // namespace

double within_cluster_ss(std::span<const double> values, std::span<const std::uint8_t> assignments) {
  int k = 0;
  for (auto a : assignments) k = std::max(k, a + 1);
  const auto means = cluster_means(values, assignments, k);
  double ss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - means[assignments[i]];
    ss += d * d;
  }
  return ss;
}

KMeansResult kmeans2_1d(std::span<const double> values, std::uint64_t /*seed*/) {
  require_spread(values, 2);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  KMeansResult r = lloyd(values, {*lo, *hi});
  r.objective = within_cluster_ss(values, r.assignments);

  // Lloyd from (min, max) reaches a fixed point that is almost always the
  // global optimum in 1-D; confirm against the best threshold split and take
  // it if it is strictly better.
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  std::vector<double> s1(sorted.size() + 1, 0.0), s2(sorted.size() + 1, 0.0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double c = sorted[i] - mean;
    s1[i + 1] = s1[i] + c;
    s2[i + 1] = s2[i] + c * c;
  }
  const std::size_t n = sorted.size();
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_split = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (sorted[i] == sorted[i - 1]) continue;
    const double nl = static_cast<double>(i), nr = static_cast<double>(n - i);
    const double left = s2[i] - s1[i] * s1[i] / nl;
    const double right = (s2[n] - s2[i]) - (s1[n] - s1[i]) * (s1[n] - s1[i]) / nr;
    if (left + right < best) {
      best = left + right;
      best_split = i;
    }
  }
  const double threshold = sorted[best_split - 1];
  std::vector<std::uint8_t> split(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) split[i] = values[i] > threshold ? 1 : 0;
  const double split_ss = within_cluster_ss(values, split);
  if (split_ss < r.objective) {
    r.assignments = std::move(split);
    r.centroids = cluster_means(values, r.assignments, 2);
    r.objective = split_ss;
  }
  sort_clusters(r);
  return r;
}

KMeansResult kmeans_1d(std::span<const double> values, int k, std::uint64_t seed) {
  if (k < 2 || k > 255) fail(ErrorCode::InvalidArgument, "k must lie in [2, 255]");
  if (k == 2) return kmeans2_1d(values, seed);
  require_spread(values, static_cast<std::size_t>(k));

  std::mt19937_64 rng(seed);
  std::vector<double> centroids;
  centroids.push_back(values[std::uniform_int_distribution<std::size_t>(0, values.size() - 1)(rng)]);
  std::vector<double> d2(values.size());
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centroids) best = std::min(best, (values[i] - c) * (values[i] - c));
      d2[i] = best;
      total += best;
    }
    double pick = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t chosen = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (d2[i] <= 0.0) continue;
      chosen = i;
      if (pick < d2[i]) break;
      pick -= d2[i];
    }
    centroids.push_back(values[chosen]);
  }
  std::sort(centroids.begin(), centroids.end());
  KMeansResult r = lloyd(values, std::move(centroids));
  sort_clusters(r);
  r.objective = within_cluster_ss(values, r.assignments);
  return r;
}

}  // namespace lcm
