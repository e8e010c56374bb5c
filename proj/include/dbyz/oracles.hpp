#pragma once

// Deliberately naive reference implementations used to cross-check the
// production code. Nothing here is tuned for speed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dbyz/core.hpp"

namespace dbyz::oracle {

/// Full sort of every coordinate column.
inline ParamVector coordinate_median(const std::vector<ParamVector>& vs) {
  const auto d = vs.front().size();
  ParamVector out(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    std::vector<double> col;
    for (const auto& v : vs) col.push_back(v[k]);
    std::sort(col.begin(), col.end());
    const std::size_t n = col.size();
    out[k] = n % 2 ? col[n / 2] : (col[n / 2 - 1] + col[n / 2]) / 2.0;
  }
  return out;
}

/// O(n^2 d) Krum scores with scalar loops and a full sort of each row.
inline std::vector<double> krum_scores(const std::vector<ParamVector>& vs, int f) {
  const int n = static_cast<int>(vs.size());
  std::vector<double> scores;
  for (int i = 0; i < n; ++i) {
    std::vector<double> dists;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0;
      for (Eigen::Index k = 0; k < vs[i].size(); ++k) s += (vs[i][k] - vs[j][k]) * (vs[i][k] - vs[j][k]);
      dists.push_back(s);
    }
    std::sort(dists.begin(), dists.end());
    double total = 0;
    for (int k = 0; k < n - f - 2; ++k) total += dists[k];
    scores.push_back(total);
  }
  return scores;
}

inline std::size_t krum_index(const std::vector<ParamVector>& vs, int f) {
  const auto scores = krum_scores(vs, f);
  return static_cast<std::size_t>(std::min_element(scores.begin(), scores.end()) - scores.begin());
}

inline double geometric_objective(const std::vector<ParamVector>& vs, double x, double y) {
  double total = 0;
  for (const auto& v : vs) total += std::hypot(v[0] - x, v[1] - y);
  return total;
}

/// Minimum of the geometric-median objective of 2-D points over nested grids:
/// a 101x101 grid on [lo, hi]^2, then repeated 41x41 grids around the best
/// point, each ten times finer, down to spacing `finest`.
inline double geometric_median_grid_min(const std::vector<ParamVector>& vs, double lo = 0.0, double hi = 1.0,
                                        double finest = 1e-9) {
  double best = std::numeric_limits<double>::infinity(), bx = lo, by = lo;
  auto scan = [&](double x0, double y0, double h, int steps) {
    for (int a = 0; a <= steps; ++a)
      for (int b = 0; b <= steps; ++b) {
        const double x = x0 + a * h, y = y0 + b * h;
        const double v = geometric_objective(vs, x, y);
        if (v < best) best = v, bx = x, by = y;
      }
  };
  double h = (hi - lo) / 100.0;
  scan(lo, lo, h, 100);
  while (h > finest) {
    const double x0 = bx - 2 * h, y0 = by - 2 * h;
    h /= 10.0;
    scan(x0, y0, h, 40);
  }
  return best;
}

/// Single-node momentum SGD on the mean of deterministic client gradients
/// g_i(x) = mu x - b_i, summing clients in index order and dividing once.
/// The first round uses alpha = 1, like the forced full first round.
inline std::vector<ParamVector> sgdm_trajectory(double mu, const std::vector<ParamVector>& b, double eta,
                                                double alpha, int rounds) {
  const auto d = b.front().size();
  const std::size_t n = b.size();
  ParamVector x = ParamVector::Zero(d);
  std::vector<ParamVector> m(n, ParamVector::Zero(d));
  std::vector<ParamVector> xs;
  for (int t = 0; t < rounds; ++t) {
    ParamVector sum = ParamVector::Zero(d);
    for (std::size_t i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) {
        const double g = mu * x[k] - b[i][k];
        const double a = t == 0 ? 1.0 : alpha;
        m[i][k] = (1.0 - a) * m[i][k] + a * g;
      }
      if (i == 0) sum = m[i];
      else
        for (Eigen::Index k = 0; k < d; ++k) sum[k] += m[i][k];
    }
    for (Eigen::Index k = 0; k < d; ++k) x[k] -= eta * (sum[k] / static_cast<double>(n));
    xs.push_back(x);
  }
  return xs;
}

}  // namespace dbyz::oracle
