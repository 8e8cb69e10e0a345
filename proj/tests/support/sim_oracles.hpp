#pragma once
// Independent re-derivations of simulator properties, written without reusing
// any simulator code.

#include <algorithm>
#include <numeric>
#include <vector>

#include "stressnet/fracture_sim.hpp"

namespace stressnet::testing {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<int> rank_;
};

/// Labels 8-connected damaged components; returns the root per pixel (or npos for intact).
inline std::vector<std::size_t> label_components(const BinaryFrame& f) {
  const std::size_t n = f.pixels.size();
  UnionFind uf(n);
  for (int r = 0; r < f.rows; ++r)
    for (int c = 0; c < f.cols; ++c) {
      if (!f.at(r, c)) continue;
      const std::size_t i = static_cast<std::size_t>(r) * f.cols + c;
      // Half of the 8-neighbourhood suffices for undirected unions.
      const int dr[] = {0, 1, 1, 1};
      const int dc[] = {1, -1, 0, 1};
      for (int k = 0; k < 4; ++k) {
        const int rr = r + dr[k], cc = c + dc[k];
        if (rr < 0 || rr >= f.rows || cc < 0 || cc >= f.cols || !f.at(rr, cc)) continue;
        uf.unite(i, static_cast<std::size_t>(rr) * f.cols + cc);
      }
    }
  std::vector<std::size_t> label(n, static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < n; ++i)
    if (f.pixels[i]) label[i] = uf.find(i);
  return label;
}

inline std::size_t count_components(const BinaryFrame& f) {
  auto label = label_components(f);
  std::vector<std::size_t> roots;
  for (auto l : label)
    if (l != static_cast<std::size_t>(-1)) roots.push_back(l);
  std::sort(roots.begin(), roots.end());
  return static_cast<std::size_t>(std::unique(roots.begin(), roots.end()) - roots.begin());
}

/// Some component touches both the first and the last column.
inline bool spans_oracle(const BinaryFrame& f) {
  const auto label = label_components(f);
  std::vector<std::size_t> left;
  for (int r = 0; r < f.rows; ++r) {
    const auto l = label[static_cast<std::size_t>(r) * f.cols];
    if (l != static_cast<std::size_t>(-1)) left.push_back(l);
  }
  for (int r = 0; r < f.rows; ++r) {
    const auto l = label[static_cast<std::size_t>(r) * f.cols + f.cols - 1];
    if (l != static_cast<std::size_t>(-1) && std::find(left.begin(), left.end(), l) != left.end()) return true;
  }
  return false;
}

/// Every pixel damaged at t stays damaged at t + 1.
inline bool monotone(const BinaryFrame& before, const BinaryFrame& after) {
  for (std::size_t i = 0; i < before.pixels.size(); ++i)
    if (before.pixels[i] && !after.pixels[i]) return false;
  return true;
}

/// Strict local maxima after the initial ramp that are followed by a drop of at
/// least `prominence` (relative) before the series exceeds them again. The ramp
/// ends at the first step reaching a quarter of the series peak.
inline int post_ramp_maxima(const std::vector<double>& y, double prominence = 0.01) {
  if (y.size() < 3) return 0;
  const double peak = *std::max_element(y.begin(), y.end());
  std::size_t start = 1;
  while (start < y.size() && y[start] < 0.25 * peak) ++start;
  int count = 0;
  for (std::size_t t = std::max<std::size_t>(start, 1); t + 1 < y.size(); ++t) {
    if (!(y[t] > y[t - 1] && y[t] > y[t + 1])) continue;
    for (std::size_t u = t + 1; u < y.size() && y[u] <= y[t]; ++u)
      if (y[u] <= (1.0 - prominence) * y[t]) {
        ++count;
        break;
      }
  }
  return count;
}

}  // namespace stressnet::testing
