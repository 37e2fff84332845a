#pragma once

#include <cstdint>
#include <vector>

#include "capmink/convex.hpp"
#include "capmink/grid.hpp"

namespace capmink {

enum NodeStatus : std::uint8_t { kFree = 0, kBody = 1, kOuter = 2 };

// One simplex of the Kuhn split of a grid cell: vertices walk from the cell
// base along the axes in the order perm[0], perm[1], perm[2].
struct Tet {
  size_t node[4];
  std::uint8_t perm[3];
  std::uint8_t pidx;
  double d[3];  // cell spacing per axis
  double vol;
};

inline void path_gradient(int n, const Tet& t, const double* vals, double* g) {
  for (int a = 0; a < n; ++a) g[t.perm[a]] = (vals[a + 1] - vals[a]) / t.d[t.perm[a]];
}

// Tet touching the body. Body vertices carry ghost values extrapolated
// through the exact boundary crossing: vals = M * u_ext + m.
struct CutTet {
  Tet tet;
  int next = 0;
  int ext[4];            // local vertex ids of exterior vertices
  double M[4][4];        // per local vertex, coefficients on exterior values
  double m[4];
  double G[4][3];        // d grad / d u_ext[i]
  double g0[3];
  double frac = 1;       // exterior volume fraction
  double phi[4];         // signed distances at the vertices
};

struct TetView {
  const Tet* tet;
  const CutTet* cut;  // null for regular tets
  double vals[4];
  double grad[3];
  double weight;  // exterior volume
};

// Fraction of a simplex where the linear interpolant of phi is positive.
double positive_fraction(int n, const double* phi);

class Discretization {
 public:
  // Nodes within snap * spacing of the body are treated as body nodes.
  Discretization(const Grid& grid, const Shape& shape, double snap = 0.02);

  const Grid& grid() const { return grid_; }
  const Shape& shape() const { return shape_; }
  const std::vector<std::uint8_t>& status() const { return status_; }
  const std::vector<double>& distance() const { return sd_; }
  const std::vector<size_t>& free_nodes() const { return free_; }
  const std::vector<size_t>& outer_nodes() const { return outer_; }
  const std::vector<CutTet>& cut_tets() const { return cuts_; }
  int stencil_size() const { return grid_.n == 3 ? 15 : 7; }
  // Slot of the neighbour offset (di,dj,dk), or -1.
  int slot(int di, int dj, int dk) const { return slot_[(di + 1) + 3 * (dj + 1) + 9 * (dk + 1)]; }
  long offset(int s) const { return offset_[s]; }

  template <class F>
  void for_each_tet(const std::vector<double>& u, F&& fn) const;

 private:
  void make_tet(int i, int j, int k, int p, Tet& t) const;

  Grid grid_;
  Shape shape_;
  std::vector<std::uint8_t> status_;
  std::vector<double> sd_;
  std::vector<size_t> free_, outer_;
  std::vector<std::uint8_t> cell_kind_;  // 0 regular, 1 touches body, 2 inside
  std::vector<CutTet> cuts_;
  int slot_[27];
  std::vector<long> offset_;
  static constexpr std::uint8_t kPerm3[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  static constexpr std::uint8_t kPerm2[2][3] = {{0, 1, 2}, {1, 0, 2}};

 public:
  int perms() const { return grid_.n == 3 ? 6 : 2; }
  const std::uint8_t* perm(int p) const { return grid_.n == 3 ? kPerm3[p] : kPerm2[p]; }
  size_t cell_count() const { return cell_kind_.size(); }
  std::uint8_t cell_kind(size_t c) const { return cell_kind_[c]; }
};

inline void Discretization::make_tet(int i, int j, int k, int p, Tet& t) const {
  const int n = grid_.n;
  const std::uint8_t* pr = perm(p);
  int c[3] = {i, j, k};
  for (int a = 0; a < 3; ++a) t.perm[a] = pr[a];
  t.pidx = std::uint8_t(p);
  double vol = 1;
  for (int d = 0; d < n; ++d) {
    t.d[d] = grid_.x[d][c[d] + 1] - grid_.x[d][c[d]];
    vol *= t.d[d];
  }
  t.vol = vol / (n == 3 ? 6.0 : 2.0);
  t.node[0] = grid_.id(c[0], c[1], c[2]);
  for (int a = 0; a < n; ++a) {
    c[pr[a]] += 1;
    t.node[a + 1] = grid_.id(c[0], c[1], c[2]);
  }
}

template <class F>
void Discretization::for_each_tet(const std::vector<double>& u, F&& fn) const {
  const int n = grid_.n;
  const int nc0 = grid_.N[0] - 1, nc1 = grid_.N[1] - 1, nc2 = n == 3 ? grid_.N[2] - 1 : 1;
  TetView v;
  Tet t;
  v.cut = nullptr;
  v.tet = &t;
  size_t cell = 0;
  for (int k = 0; k < nc2; ++k)
    for (int j = 0; j < nc1; ++j)
      for (int i = 0; i < nc0; ++i, ++cell) {
        if (cell_kind_[cell] != 0) continue;
        for (int p = 0; p < perms(); ++p) {
          make_tet(i, j, k, p, t);
          for (int a = 0; a <= n; ++a) v.vals[a] = u[t.node[a]];
          path_gradient(n, t, v.vals, v.grad);
          v.weight = t.vol;
          fn(v);
        }
      }
  for (const CutTet& c : cuts_) {
    v.cut = &c;
    v.tet = &c.tet;
    double ue[4];
    for (int e = 0; e < c.next; ++e) ue[e] = u[c.tet.node[c.ext[e]]];
    for (int a = 0; a <= n; ++a) {
      double s = c.m[a];
      for (int e = 0; e < c.next; ++e) s += c.M[a][e] * ue[e];
      v.vals[a] = s;
    }
    for (int d = 0; d < n; ++d) {
      double s = c.g0[d];
      for (int e = 0; e < c.next; ++e) s += c.G[e][d] * ue[e];
      v.grad[d] = s;
    }
    v.weight = c.tet.vol * c.frac;
    fn(v);
  }
  v.cut = nullptr;
}

}  // namespace capmink
