#include "capmink/sphere.hpp"

#include <array>
#include <cmath>
#include <map>
#include <numbers>

namespace capmink {

namespace {

Dir normalized(double x, double y, double z) {
  double r = std::sqrt(x * x + y * y + z * z);
  Dir d;
  d[0] = x / r;
  d[1] = y / r;
  d[2] = z / r;
  return d;
}

}  // namespace

std::vector<Dir> icosphere(int level) {
  const double t = (1 + std::sqrt(5.0)) / 2;
  std::vector<Dir> v = {
      normalized(-1, t, 0), normalized(1, t, 0),   normalized(-1, -t, 0), normalized(1, -t, 0),
      normalized(0, -1, t), normalized(0, 1, t),   normalized(0, -1, -t), normalized(0, 1, -t),
      normalized(t, 0, -1), normalized(t, 0, 1),   normalized(-t, 0, -1), normalized(-t, 0, 1)};
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back(normalized(v[a][0] + v[b][0], v[a][1] + v[b][1], v[a][2] + v[b][2]));
      int id = int(v.size()) - 1;
      mid[key] = id;
      return id;
    };
    std::vector<std::array<int, 3>> g;
    g.reserve(f.size() * 4);
    for (auto& tri : f) {
      int a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
      g.push_back({tri[0], a, c});
      g.push_back({tri[1], b, a});
      g.push_back({tri[2], c, b});
      g.push_back({a, b, c});
    }
    f.swap(g);
  }
  std::vector<Dir> out;
  out.reserve(f.size());
  for (auto& tri : f) {
    out.push_back(normalized(v[tri[0]][0] + v[tri[1]][0] + v[tri[2]][0],
                             v[tri[0]][1] + v[tri[1]][1] + v[tri[2]][1],
                             v[tri[0]][2] + v[tri[1]][2] + v[tri[2]][2]));
  }
  return out;
}

std::vector<Dir> circle_grid(int count) {
  std::vector<Dir> out(count);
  for (int k = 0; k < count; ++k) {
    double a = 2 * std::numbers::pi * k / count;
    out[k][0] = std::cos(a);
    out[k][1] = std::sin(a);
  }
  return out;
}

std::vector<Dir> fibonacci_sphere(int count) {
  std::vector<Dir> out(count);
  const double ga = std::numbers::pi * (3 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    double z = 1 - (2.0 * k + 1) / count;
    double r = std::sqrt(std::max(0.0, 1 - z * z));
    out[k][0] = r * std::cos(ga * k);
    out[k][1] = r * std::sin(ga * k);
    out[k][2] = z;
  }
  return out;
}

std::vector<Dir> direction_grid(int n, int count_hint) {
  if (n == 2) return circle_grid(std::max(count_hint, 8));
  int level = 0;
  while (20 * (1 << (2 * level)) < count_hint) ++level;
  return icosphere(level);
}

void gauss_legendre(int m, std::vector<double>& x, std::vector<double>& w) {
  x.assign(m, 0);
  w.assign(m, 0);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = 0;
      for (int j = 1; j <= m; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2 * j - 1) * z * p1 - (j - 1) * p2) / j;
      }
      dp = m * (z * p0 - p1) / (z * z - 1);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1, p1 = 0;
    for (int j = 1; j <= m; ++j) {
      double p2 = p1;
      p1 = p0;
      p0 = ((2 * j - 1) * z * p1 - (j - 1) * p2) / j;
    }
    dp = m * (z * p0 - p1) / (z * z - 1);
    x[i] = -z;
    x[m - 1 - i] = z;
    w[i] = w[m - 1 - i] = 2 / ((1 - z * z) * dp * dp);
  }
}

Dir random_unit(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0, 1);
  Dir d;
  double r = 0;
  do {
    r = 0;
    for (int i = 0; i < n; ++i) {
      d[i] = N(rng);
      r += d[i] * d[i];
    }
  } while (r < 1e-20);
  r = std::sqrt(r);
  for (int i = 0; i < n; ++i) d[i] /= r;
  return d;
}

double sphere_area(int n) {
  return 2 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0);
}

}  // namespace capmink
