#pragma once

// Slow, obviously-correct reference implementations and random generators
// shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cte/align.hpp"
#include "cte/seqdesc.hpp"

namespace oracle {

using cd = std::complex<double>;

// O(L^2) DFT straight from the definition.
inline std::vector<cd> naive_dft(const std::vector<cd>& x, bool inverse = false) {
  const std::size_t L = x.size();
  std::vector<cd> out(L);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < L; ++k) {
    cd acc = 0.0;
    for (std::size_t t = 0; t < L; ++t) {
      const double a = sign * 2.0 * std::numbers::pi * static_cast<double>((k * t) % L) /
                       static_cast<double>(L);
      acc += x[t] * cd(std::cos(a), std::sin(a));
    }
    out[k] = inverse ? acc / static_cast<double>(L) : acc;
  }
  return out;
}

// Row j of a sequence zero padded to `length`.
inline std::vector<cd> dimension_row(const cte::DescriptorSequence& s, std::size_t j,
                                     std::size_t length) {
  std::vector<cd> row(length, 0.0);
  for (std::size_t t = 0; t < s.size() && t < length; ++t) row[t] = s.at(t, j);
  return row;
}

// values[delta] = sum_t <q_t, b_{(t - delta) mod L}> over explicit frame
// arrays already laid out at circular length L.
inline std::vector<double> circular_correlation(const std::vector<std::vector<double>>& q,
                                                const std::vector<std::vector<double>>& b) {
  const std::size_t L = q.size();
  std::vector<double> out(L, 0.0);
  for (std::size_t delta = 0; delta < L; ++delta) {
    double acc = 0.0;
    for (std::size_t t = 0; t < L; ++t) {
      const auto& x = q[t];
      const auto& y = b[(t + L - delta) % L];
      for (std::size_t k = 0; k < x.size(); ++k) acc += x[k] * y[k];
    }
    out[delta] = acc;
  }
  return out;
}

// Frames of `s` laid out over `length` slots, each copy of the padded
// sequence (period `period`) repeated until `length`.
inline std::vector<std::vector<double>> frames_repeated(const cte::DescriptorSequence& s,
                                                        std::size_t period, std::size_t length) {
  std::vector<std::vector<double>> out(length, std::vector<double>(s.dim(), 0.0));
  for (std::size_t t = 0; t < length; ++t) {
    const std::size_t src = t % period;
    if (src < s.size()) {
      for (std::size_t k = 0; k < s.dim(); ++k) out[t][k] = s.at(src, k);
    }
  }
  return out;
}

// Uniform random frames with norm <= 1.
inline cte::DescriptorSequence random_sequence(std::mt19937_64& rng, std::size_t n,
                                               std::size_t d, std::string id = "r",
                                               float fps = 15.0f) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<float> v(n * d);
  for (std::size_t t = 0; t < n; ++t) {
    double norm = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      v[t * d + k] = static_cast<float>(g(rng));
      norm += static_cast<double>(v[t * d + k]) * v[t * d + k];
    }
    const double scale = u(rng) / std::max(std::sqrt(norm), 1e-12);
    for (std::size_t k = 0; k < d; ++k) v[t * d + k] = static_cast<float>(v[t * d + k] * scale);
  }
  return cte::DescriptorSequence(std::move(id), fps, d, std::move(v));
}

// AP straight from the definition, one relevant hit at a time.
inline double brute_force_ap(const std::vector<std::string>& ranking,
                             const std::set<std::string>& relevant) {
  if (relevant.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    if (!relevant.count(ranking[r])) continue;
    std::size_t hits = 0;
    for (std::size_t s = 0; s <= r; ++s) hits += relevant.count(ranking[s]);
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  return sum / static_cast<double>(relevant.size());
}

// Maximum total score over all spanning forests of a small graph, by
// enumerating edge subsets. Returns the best subset (a max spanning forest).
inline double best_spanning_forest_weight(std::size_t nodes,
                                          const std::vector<cte::MatchEdge>& edges) {
  const std::size_t m = edges.size();
  double best = -1.0;
  std::size_t best_count = 0;
  for (std::uint64_t mask = 0; mask < (1ull << m); ++mask) {
    std::vector<int> parent(nodes);
    for (std::size_t i = 0; i < nodes; ++i) parent[i] = static_cast<int>(i);
    std::function<int(int)> find = [&](int x) {
      return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    bool acyclic = true;
    double w = 0.0;
    std::size_t count = 0;
    for (std::size_t e = 0; e < m && acyclic; ++e) {
      if (!(mask >> e & 1)) continue;
      const int a = find(edges[e].i), b = find(edges[e].j);
      if (a == b) acyclic = false;
      parent[a] = b;
      w += edges[e].score;
      ++count;
    }
    if (!acyclic) continue;
    // Prefer forests with more edges (spanning), then weight.
    if (count > best_count || (count == best_count && w > best)) {
      best = w;
      best_count = count;
    }
  }
  return best;
}

}  // namespace oracle
