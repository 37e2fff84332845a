#include "capmink/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "capmink/error.hpp"

namespace capmink {

namespace {

// Volume fraction of {phi > 0}; assumes distinct values.
double divided_fraction(int n, const double* v) {
  double s = 0;
  for (int i = 0; i <= n; ++i) {
    if (v[i] <= 0) continue;
    double den = 1;
    for (int j = 0; j <= n; ++j)
      if (j != i) den *= v[i] - v[j];
    s += std::pow(v[i], n) / den;
  }
  return s;
}

}  // namespace

double positive_fraction(int n, const double* phi) {
  int pos = 0, neg = 0;
  double scale = 0;
  for (int i = 0; i <= n; ++i) {
    if (phi[i] > 0) ++pos;
    if (phi[i] < 0) ++neg;
    scale = std::max(scale, std::abs(phi[i]));
  }
  if (neg == 0) return pos > 0 || scale == 0 ? 1.0 : 0.0;
  if (pos == 0) return 0.0;
  // fewer positive terms is better conditioned
  bool flip = 2 * pos > n + 1;
  double v[4];
  for (int i = 0; i <= n; ++i) v[i] = flip ? -phi[i] : phi[i];
  int idx[4];
  std::iota(idx, idx + n + 1, 0);
  std::sort(idx, idx + n + 1, [&](int a, int b) { return v[a] < v[b]; });
  const double gap = 1e-6 * scale;
  for (int a = 1; a <= n; ++a)
    if (v[idx[a]] < v[idx[a - 1]] + gap) v[idx[a]] = v[idx[a - 1]] + gap;
  double f = std::clamp(divided_fraction(n, v), 0.0, 1.0);
  return flip ? 1 - f : f;
}

Discretization::Discretization(const Grid& grid, const Shape& shape, double snap) : grid_(grid), shape_(shape) {
  const int n = grid_.n;
  if (shape_.dim() != n) fail(ErrorCode::Domain, "body and grid dimensions differ");
  const size_t N = grid_.size();
  status_.assign(N, kFree);
  sd_.assign(N, 0);

  double lo[3], hi[3], bc[3] = {0, 0, 0}, brad = 0;
  shape_.bounding_box(lo, hi);
  for (int d = 0; d < n; ++d) {
    bc[d] = 0.5 * (lo[d] + hi[d]);
    brad += 0.25 * (hi[d] - lo[d]) * (hi[d] - lo[d]);
  }
  brad = std::sqrt(brad);

  double x[3] = {0, 0, 0};
  for (size_t id = 0; id < N; ++id) {
    grid_.coords(id, x);
    double r = 0;
    for (int d = 0; d < n; ++d) r += (x[d] - bc[d]) * (x[d] - bc[d]);
    r = std::sqrt(r);
    double spacing = grid_.local_spacing(id);
    // far nodes only need a positive lower bound
    double sd = r > brad + 3 * spacing ? r - brad : shape_.signed_distance(x);
    sd_[id] = sd;
    if (grid_.on_box(id)) {
      if (sd <= snap * spacing) fail(ErrorCode::GridTooCoarse, "body reaches the outer box");
      status_[id] = kOuter;
    } else if (sd <= snap * spacing) {
      status_[id] = kBody;
    }
  }

  std::fill(slot_, slot_ + 27, -1);
  int s = 0;
  for (int dk = (n == 3 ? -1 : 0); dk <= (n == 3 ? 1 : 0); ++dk)
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        bool hp = di > 0 || dj > 0 || dk > 0, hn = di < 0 || dj < 0 || dk < 0;
        if (hp && hn) continue;
        slot_[(di + 1) + 3 * (dj + 1) + 9 * (dk + 1)] = s++;
        offset_.push_back(long(di) + long(grid_.N[0]) * (long(dj) + long(grid_.N[1]) * dk));
      }

  const int nc0 = grid_.N[0] - 1, nc1 = grid_.N[1] - 1, nc2 = n == 3 ? grid_.N[2] - 1 : 1;
  cell_kind_.assign(size_t(nc0) * nc1 * nc2, 0);
  const int corners = 1 << n;
  size_t cell = 0;
  Tet t;
  double xv[4][3];
  for (int k = 0; k < nc2; ++k)
    for (int j = 0; j < nc1; ++j)
      for (int i = 0; i < nc0; ++i, ++cell) {
        int nb = 0;
        for (int c = 0; c < corners; ++c) {
          size_t id = grid_.id(i + (c & 1), j + ((c >> 1) & 1), n == 3 ? k + ((c >> 2) & 1) : 0);
          nb += status_[id] == kBody;
        }
        if (nb == 0) continue;
        cell_kind_[cell] = nb == corners ? 2 : 1;
        if (nb == corners) continue;
        for (int p = 0; p < perms(); ++p) {
          make_tet(i, j, k, p, t);
          int body = 0;
          for (int a = 0; a <= n; ++a) body += status_[t.node[a]] == kBody;
          if (body == n + 1) continue;
          CutTet ct;
          ct.tet = t;
          ct.next = 0;
          for (int a = 0; a <= n; ++a) {
            grid_.coords(t.node[a], xv[a]);
            if (status_[t.node[a]] == kOuter) fail(ErrorCode::GridTooCoarse, "body reaches the outer box");
            if (status_[t.node[a]] != kBody) ct.ext[ct.next++] = a;
          }
          for (int a = 0; a <= n; ++a) {
            for (int e = 0; e < 4; ++e) ct.M[a][e] = 0;
            ct.m[a] = 0;
          }
          for (int e = 0; e < ct.next; ++e) ct.M[ct.ext[e]][e] = 1;
          for (int a = 0; a <= n; ++a) {
            if (status_[t.node[a]] != kBody) {
              ct.phi[a] = sd_[t.node[a]];
              continue;
            }
            ct.phi[a] = std::min(sd_[t.node[a]], 0.0);
            // linear extrapolation through the boundary crossing on each
            // edge to an exterior vertex, averaged with weights theta
            double th[4], sum = 0;
            for (int e = 0; e < ct.next; ++e) {
              const double* xo = xv[ct.ext[e]];
              double len = 0;
              for (int d = 0; d < n; ++d) len += (xv[a][d] - xo[d]) * (xv[a][d] - xo[d]);
              len = std::sqrt(len);
              // a snapped vertex sits on the boundary; the crossing is never
              // closer to the exterior vertex than its distance
              double te = sd_[t.node[a]] >= 0 ? 1.0 : shape_.exit_fraction(xo, xv[a]);
              th[e] = std::clamp(std::max(te, sd_[t.node[ct.ext[e]]] / len), 1e-3, 1.0);
              sum += th[e];
            }
            for (int e = 0; e < ct.next; ++e) ct.M[a][e] = (th[e] - 1) / sum;
            ct.m[a] = ct.next / sum;
          }
          double col[4];
          for (int e = 0; e < ct.next; ++e) {
            for (int a = 0; a <= n; ++a) col[a] = ct.M[a][e];
            path_gradient(n, t, col, ct.G[e]);
          }
          path_gradient(n, t, ct.m, ct.g0);
          ct.frac = positive_fraction(n, ct.phi);
          if (ct.frac <= 0) continue;
          cuts_.push_back(ct);
        }
      }

  for (size_t id = 0; id < N; ++id) {
    if (status_[id] == kFree) free_.push_back(id);
    if (status_[id] == kOuter) outer_.push_back(id);
  }
}

}  // namespace capmink
