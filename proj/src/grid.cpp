#include "capmink/grid.hpp"

#include <algorithm>
#include <cmath>

#include "capmink/convex.hpp"
#include "capmink/error.hpp"

namespace capmink {

nlohmann::json GridFrame::to_json() const {
  return {{"n", n},
          {"center", std::vector<double>(center.begin(), center.begin() + n)},
          {"core_lo", std::vector<double>(core_lo.begin(), core_lo.begin() + n)},
          {"core_hi", std::vector<double>(core_hi.begin(), core_hi.begin() + n)},
          {"R_out", R_out},
          {"r_out", r_out}};
}

GridFrame GridFrame::from_json(const nlohmann::json& j) {
  GridFrame f;
  f.n = j.at("n").get<int>();
  auto c = j.at("center").get<std::vector<double>>();
  auto lo = j.at("core_lo").get<std::vector<double>>();
  auto hi = j.at("core_hi").get<std::vector<double>>();
  for (int d = 0; d < f.n; ++d) {
    f.center[d] = c.at(d);
    f.core_lo[d] = lo.at(d);
    f.core_hi[d] = hi.at(d);
  }
  f.R_out = j.at("R_out").get<double>();
  f.r_out = j.value("r_out", f.R_out / 8);
  return f;
}

GridFrame make_frame(const Shape& shape, double r_out_factor, double margin) {
  GridFrame f;
  f.n = shape.dim();
  Radii r = shape.radii();
  double lo[3], hi[3];
  shape.bounding_box(lo, hi);
  for (int d = 0; d < f.n; ++d) f.center[d] = r.chebyshev_center[d];
  // radius about the pole: support of E - c in the worst direction
  double ro = 0;
  if (shape.has_core()) {
    for (auto& v : shape.core().vertices()) {
      double s = 0;
      for (int d = 0; d < f.n; ++d) s += (v[d] - f.center[d]) * (v[d] - f.center[d]);
      ro = std::max(ro, std::sqrt(s));
    }
    ro += shape.radius();
  } else {
    double s = 0;
    for (int d = 0; d < f.n; ++d) s += (shape.center()[d] - f.center[d]) * (shape.center()[d] - f.center[d]);
    ro = std::sqrt(s) + shape.radius();
  }
  f.r_out = ro;
  f.R_out = r_out_factor * ro;
  for (int d = 0; d < f.n; ++d) {
    f.core_lo[d] = lo[d] - margin * ro;
    f.core_hi[d] = hi[d] + margin * ro;
  }
  return f;
}

GridFrame merge_frames(const std::vector<GridFrame>& frames) {
  if (frames.empty()) fail(ErrorCode::Domain, "no frames to merge");
  GridFrame f = frames[0];
  for (auto& g : frames) {
    for (int d = 0; d < f.n; ++d) {
      f.core_lo[d] = std::min(f.core_lo[d], g.core_lo[d]);
      f.core_hi[d] = std::max(f.core_hi[d], g.core_hi[d]);
    }
  }
  // keep the first pole; grow the box to hold every other box
  for (auto& g : frames) {
    double need = 0;
    for (int d = 0; d < f.n; ++d)
      need = std::max(need, std::abs(g.center[d] - f.center[d]) + g.R_out);
    f.R_out = std::max(f.R_out, need);
    f.r_out = std::max(f.r_out, g.r_out);
  }
  return f;
}

namespace {

std::vector<double> build_axis(double lo_core, double hi_core, double a, double b, double h, double stretch) {
  long k0 = long(std::floor(lo_core / h)), k1 = long(std::ceil(hi_core / h));
  if (!(a < k0 * h - 0.5 * h && k1 * h + 0.5 * h < b))
    fail(ErrorCode::GridTooCoarse, "core region does not fit inside the outer box");
  std::vector<double> up, down;
  double x = k1 * h, d = h;
  for (;;) {
    d *= stretch;
    if (x + d >= b - 0.3 * d) {
      up.push_back(b);
      break;
    }
    x += d;
    up.push_back(x);
  }
  x = k0 * h;
  d = h;
  for (;;) {
    d *= stretch;
    if (x - d <= a + 0.3 * d) {
      down.push_back(a);
      break;
    }
    x -= d;
    down.push_back(x);
  }
  std::vector<double> out(down.rbegin(), down.rend());
  for (long k = k0; k <= k1; ++k) out.push_back(k * h);
  out.insert(out.end(), up.begin(), up.end());
  return out;
}

}  // namespace

Grid build_grid(const GridFrame& frame, double h, double stretch) {
  if (!(h > 0)) fail(ErrorCode::Domain, "grid spacing must be positive");
  if (!(stretch >= 1)) fail(ErrorCode::Domain, "stretch must be >= 1");
  Grid g;
  g.n = frame.n;
  g.h = h;
  g.stretch = stretch;
  g.frame = frame;
  for (int d = 0; d < g.n; ++d) {
    g.x[d] = build_axis(frame.core_lo[d], frame.core_hi[d], frame.center[d] - frame.R_out,
                        frame.center[d] + frame.R_out, h, stretch);
    g.N[d] = int(g.x[d].size());
  }
  for (int d = g.n; d < 3; ++d) {
    g.x[d] = {0.0};
    g.N[d] = 1;
  }
  if (g.size() > size_t(40'000'000)) fail(ErrorCode::GridTooCoarse, "grid exceeds 4e7 nodes");
  return g;
}

double Grid::local_spacing(size_t node) const {
  int c[3];
  ijk(node, c);
  double s = 0;
  for (int d = 0; d < n; ++d) {
    if (c[d] > 0) s = std::max(s, x[d][c[d]] - x[d][c[d] - 1]);
    if (c[d] + 1 < N[d]) s = std::max(s, x[d][c[d] + 1] - x[d][c[d]]);
  }
  return s;
}

double Grid::interpolate(const std::vector<double>& u, const double* p) const {
  int base[3] = {0, 0, 0};
  double t[3] = {0, 0, 0};
  for (int d = 0; d < n; ++d) {
    const auto& ax = x[d];
    double v = std::clamp(p[d], ax.front(), ax.back());
    int i = int(std::upper_bound(ax.begin(), ax.end(), v) - ax.begin()) - 1;
    i = std::clamp(i, 0, N[d] - 2);
    base[d] = i;
    t[d] = (v - ax[i]) / (ax[i + 1] - ax[i]);
  }
  double s = 0;
  int corners = 1 << n;
  for (int c = 0; c < corners; ++c) {
    double w = 1;
    int idx[3] = {0, 0, 0};
    for (int d = 0; d < n; ++d) {
      int bit = (c >> d) & 1;
      w *= bit ? t[d] : 1 - t[d];
      idx[d] = base[d] + bit;
    }
    if (w != 0) s += w * u[id(idx[0], idx[1], idx[2])];
  }
  return s;
}

std::vector<double> transfer(const Grid& from, const std::vector<double>& u, const Grid& to) {
  std::vector<double> out(to.size());
  double p[3];
  for (size_t i = 0; i < to.size(); ++i) {
    to.coords(i, p);
    out[i] = from.interpolate(u, p);
  }
  return out;
}

}  // namespace capmink
