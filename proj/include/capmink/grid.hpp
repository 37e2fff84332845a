#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <json.hpp>

namespace capmink {

class Shape;

// Placement of the truncated exterior domain: pole of the far-field
// expansion, uniformly resolved core region and box half-width.
struct GridFrame {
  int n = 3;
  std::array<double, 3> center{0, 0, 0};
  std::array<double, 3> core_lo{0, 0, 0}, core_hi{0, 0, 0};
  double R_out = 0;
  double r_out = 0;  // body radius about the center

  nlohmann::json to_json() const;
  static GridFrame from_json(const nlohmann::json& j);
};

// margin: extra uniform band around the body bounding box, as a multiple
// of the body radius.
GridFrame make_frame(const Shape& shape, double r_out_factor, double margin);
// Smallest frame holding every frame in the list.
GridFrame merge_frames(const std::vector<GridFrame>& frames);

// Tensor grid: uniform spacing h on the core (anchored to the lattice hZ),
// geometric growth by `stretch` toward the box faces.
struct Grid {
  int n = 3;
  std::array<int, 3> N{1, 1, 1};
  std::array<std::vector<double>, 3> x;
  double h = 0;
  double stretch = 1;
  GridFrame frame;

  size_t size() const { return size_t(N[0]) * N[1] * N[2]; }
  size_t id(int i, int j, int k = 0) const { return size_t(i) + size_t(N[0]) * (size_t(j) + size_t(N[1]) * k); }
  void ijk(size_t id, int* c) const {
    c[0] = int(id % N[0]);
    size_t r = id / N[0];
    c[1] = int(r % N[1]);
    c[2] = int(r / N[1]);
  }
  void coords(size_t id, double* p) const {
    int c[3];
    ijk(id, c);
    for (int d = 0; d < n; ++d) p[d] = x[d][c[d]];
  }
  bool on_box(size_t id) const {
    int c[3];
    ijk(id, c);
    for (int d = 0; d < n; ++d)
      if (c[d] == 0 || c[d] == N[d] - 1) return true;
    return false;
  }
  // Largest spacing of the cells touching the node.
  double local_spacing(size_t id) const;
  // Multilinear interpolation of a nodal field; clamps to the box.
  double interpolate(const std::vector<double>& u, const double* p) const;
};

Grid build_grid(const GridFrame& frame, double h, double stretch);

// Nodal field of `from` resampled onto the nodes of `to`.
std::vector<double> transfer(const Grid& from, const std::vector<double>& u, const Grid& to);

}  // namespace capmink
