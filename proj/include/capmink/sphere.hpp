#pragma once

#include <random>
#include <vector>

namespace capmink {

struct Dir {
  double v[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  double operator[](int i) const { return v[i]; }
  double& operator[](int i) { return v[i]; }
};

// Icosphere triangle centroids (20 * 4^level) for n = 3, uniform angles for n = 2.
std::vector<Dir> direction_grid(int n, int count_hint = 1280);
std::vector<Dir> icosphere(int level);
std::vector<Dir> circle_grid(int count);
std::vector<Dir> fibonacci_sphere(int count);

void gauss_legendre(int m, std::vector<double>& x, std::vector<double>& w);

// Integral over S^{n-1} of g(omega); product Gauss-Legendre in cos(theta)
// times trapezoid in phi for n = 3, trapezoid for n = 2.
template <class F>
double sphere_integral(int n, int level, F&& g);

Dir random_unit(int n, std::mt19937_64& rng);

double sphere_area(int n);

}  // namespace capmink

#include <cmath>
#include <numbers>

namespace capmink {

template <class F>
double sphere_integral(int n, int level, F&& g) {
  const double pi = std::numbers::pi;
  if (n == 2) {
    int m = level;
    double s = 0;
    for (int k = 0; k < m; ++k) {
      double t = 2 * pi * (k + 0.5) / m;
      Dir d;
      d[0] = std::cos(t);
      d[1] = std::sin(t);
      s += g(d);
    }
    return s * 2 * pi / m;
  }
  std::vector<double> x, w;
  gauss_legendre(level, x, w);
  int mp = 2 * level;
  double s = 0;
  for (int i = 0; i < level; ++i) {
    double ct = x[i], st = std::sqrt(std::max(0.0, 1 - ct * ct));
    double row = 0;
    for (int k = 0; k < mp; ++k) {
      double ph = 2 * pi * (k + 0.5) / mp;
      Dir d;
      d[0] = st * std::cos(ph);
      d[1] = st * std::sin(ph);
      d[2] = ct;
      row += g(d);
    }
    s += w[i] * row * 2 * pi / mp;
  }
  return s;
}

}  // namespace capmink
