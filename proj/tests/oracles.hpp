#pragma once

// Reference computations that share no code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

constexpr double pi = std::numbers::pi;

inline double sphere_area(int n) { return n == 2 ? 2 * pi : 4 * pi; }

// Radial solution u(r) = (r/R)^{(p-n)/(p-1)} of the isotropic problem.
inline double ball_capacity(int n, double p, double R) {
  return sphere_area(n) * std::pow((n - p) / (p - 1), p - 1) * std::pow(R, n - p);
}

inline double ball_potential(int n, double p, double R, double r) { return std::pow(r / R, (p - n) / (p - 1)); }

// Isotropic fundamental solution normalized so that u = Cap^{1/(p-1)} G for
// every ball; independent of R.
inline double isotropic_G(int n, double p, double r) {
  return ball_potential(n, p, 1, r) / std::pow(ball_capacity(n, p, 1), 1 / (p - 1));
}

inline std::vector<double> central_gradient(const std::function<double(const double*)>& f, const double* x, int n,
                                            double step) {
  std::vector<double> g(n);
  std::vector<double> a(x, x + n), b(x, x + n);
  for (int i = 0; i < n; ++i) {
    a[i] = x[i] + step;
    b[i] = x[i] - step;
    g[i] = (f(a.data()) - f(b.data())) / (2 * step);
    a[i] = b[i] = x[i];
  }
  return g;
}

// max <X, eta> over eta = omega / k(omega) for a dense Fibonacci sampling of
// omega, refined by a local random search.
inline double dense_support(const std::function<double(const double*)>& gauge, const double* X, int samples = 200000) {
  double best = -1e300;
  std::array<double, 3> bw{};
  const double ga = pi * (3 - std::sqrt(5.0));
  for (int i = 0; i < samples; ++i) {
    double z = 1 - 2 * (i + 0.5) / samples, r = std::sqrt(1 - z * z), t = ga * i;
    double w[3] = {r * std::cos(t), r * std::sin(t), z};
    double k = gauge(w), v = (w[0] * X[0] + w[1] * X[1] + w[2] * X[2]) / k;
    if (v > best) {
      best = v;
      bw = {w[0], w[1], w[2]};
    }
  }
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N(0, 1);
  double step = 0.01;
  for (int it = 0; it < 20000; ++it) {
    double w[3];
    double nn = 0;
    for (int d = 0; d < 3; ++d) {
      w[d] = bw[d] + step * N(rng);
      nn += w[d] * w[d];
    }
    nn = std::sqrt(nn);
    for (double& c : w) c /= nn;
    double v = (w[0] * X[0] + w[1] * X[1] + w[2] * X[2]) / gauge(w);
    if (v > best) {
      best = v;
      bw = {w[0], w[1], w[2]};
    }
    if (it % 2000 == 1999) step *= 0.3;
  }
  return best;
}

// Vertices of {x : <x, n_i> <= q_i} in R^3 by brute force over triples.
inline std::vector<std::array<double, 3>> vertices3(const std::vector<std::array<double, 3>>& N,
                                                    const std::vector<double>& q) {
  std::vector<std::array<double, 3>> out;
  const size_t m = N.size();
  for (size_t a = 0; a < m; ++a)
    for (size_t b = a + 1; b < m; ++b)
      for (size_t c = b + 1; c < m; ++c) {
        const auto &A = N[a], &B = N[b], &C = N[c];
        double det = A[0] * (B[1] * C[2] - B[2] * C[1]) - A[1] * (B[0] * C[2] - B[2] * C[0]) +
                     A[2] * (B[0] * C[1] - B[1] * C[0]);
        if (std::abs(det) < 1e-12) continue;
        // Cramer
        auto solve = [&](int col) {
          double M[3][3] = {{A[0], A[1], A[2]}, {B[0], B[1], B[2]}, {C[0], C[1], C[2]}};
          double r[3] = {q[a], q[b], q[c]};
          for (int i = 0; i < 3; ++i) M[i][col] = r[i];
          return (M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
                  M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])) /
                 det;
        };
        std::array<double, 3> x{solve(0), solve(1), solve(2)};
        bool ok = true;
        for (size_t i = 0; i < m && ok; ++i) ok = N[i][0] * x[0] + N[i][1] * x[1] + N[i][2] * x[2] <= q[i] + 1e-9;
        if (!ok) continue;
        bool dup = false;
        for (auto& v : out) dup = dup || std::hypot(v[0] - x[0], v[1] - x[1], v[2] - x[2]) < 1e-9;
        if (!dup) out.push_back(x);
      }
  return out;
}

// Area of the planar convex polygon spanned by pts (any order) with normal nrm.
inline double polygon_area(std::vector<std::array<double, 3>> pts, const std::array<double, 3>& nrm) {
  if (pts.size() < 3) return 0;
  std::array<double, 3> c{0, 0, 0};
  for (auto& p : pts)
    for (int d = 0; d < 3; ++d) c[d] += p[d] / pts.size();
  std::array<double, 3> e1{pts[0][0] - c[0], pts[0][1] - c[1], pts[0][2] - c[2]};
  double l = std::hypot(e1[0], e1[1], e1[2]);
  for (double& v : e1) v /= l;
  std::array<double, 3> e2{nrm[1] * e1[2] - nrm[2] * e1[1], nrm[2] * e1[0] - nrm[0] * e1[2],
                           nrm[0] * e1[1] - nrm[1] * e1[0]};
  std::vector<std::pair<double, double>> uv;
  for (auto& p : pts) {
    double d[3] = {p[0] - c[0], p[1] - c[1], p[2] - c[2]};
    uv.push_back({d[0] * e1[0] + d[1] * e1[1] + d[2] * e1[2], d[0] * e2[0] + d[1] * e2[1] + d[2] * e2[2]});
  }
  std::sort(uv.begin(), uv.end(), [](auto& a, auto& b) { return std::atan2(a.second, a.first) < std::atan2(b.second, b.first); });
  double s = 0;
  for (size_t i = 0; i < uv.size(); ++i) {
    auto& a = uv[i];
    auto& b = uv[(i + 1) % uv.size()];
    s += a.first * b.second - a.second * b.first;
  }
  return 0.5 * std::abs(s);
}

// Largest inscribed ball of a 3-d polytope by a coarse-to-fine search over
// centers; r(c) = min_i (q_i - <n_i, c>).
inline double inradius3(const std::vector<std::array<double, 3>>& N, const std::vector<double>& q,
                        std::array<double, 3> c, double span) {
  auto r = [&](const std::array<double, 3>& x) {
    double m = 1e300;
    for (size_t i = 0; i < N.size(); ++i) m = std::min(m, q[i] - (N[i][0] * x[0] + N[i][1] * x[1] + N[i][2] * x[2]));
    return m;
  };
  double best = r(c);
  for (int level = 0; level < 40; ++level) {
    std::array<double, 3> bc = c;
    for (int i = -4; i <= 4; ++i)
      for (int j = -4; j <= 4; ++j)
        for (int k = -4; k <= 4; ++k) {
          std::array<double, 3> x{c[0] + span * i / 4, c[1] + span * j / 4, c[2] + span * k / 4};
          double v = r(x);
          if (v > best) {
            best = v;
            bc = x;
          }
        }
    c = bc;
    span *= 0.5;
  }
  return best;
}

}  // namespace oracle
