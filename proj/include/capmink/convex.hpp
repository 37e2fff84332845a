#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "capmink/sphere.hpp"

namespace capmink {

using Point = std::vector<double>;

struct Face {
  int index = -1;        // constraint index in the owning polytope
  Point normal;
  double area = 0;       // (n-1)-measure
  std::vector<int> loop;  // vertex ids; ordered cyclically for n = 3
  std::vector<Point> samples;  // interior quadrature points
  std::vector<double> weights;  // quadrature weights, summing to area
};

// {x : <x, xi_i> <= q_i}. Vertices and faces are computed on construction.
class Polytope {
 public:
  Polytope(std::vector<Point> normals, std::vector<double> heights);

  int dim() const { return n_; }
  int size() const { return int(normals_.size()); }
  const std::vector<Point>& normals() const { return normals_; }
  const std::vector<double>& heights() const { return heights_; }
  const std::vector<Point>& vertices() const { return vertices_; }
  // Constraint indices active at each vertex.
  const std::vector<std::vector<int>>& vertex_faces() const { return vertex_faces_; }
  const std::vector<Face>& faces() const { return faces_; }
  bool bounded() const { return bounded_; }
  bool full_dimensional() const { return full_; }

  double support(const double* theta) const;
  bool contains(const double* x, double tol = 1e-12) const;
  // Face of constraint i, or nullptr when that face is empty.
  const Face* face_of(int i) const;

  Polytope scaled(double rho) const;
  Polytope translated(const double* z) const;
  // Copy keeping only constraints with a face of positive area.
  Polytope pruned() const;

 private:
  void enumerate();

  int n_ = 0;
  std::vector<Point> normals_;
  std::vector<double> heights_;
  std::vector<Point> vertices_;
  std::vector<std::vector<int>> vertex_faces_;
  std::vector<Face> faces_;
  std::vector<int> face_lookup_;
  bool bounded_ = false, full_ = false;
};

// Fills face quadrature samples with roughly `spacing` resolution.
void sample_faces(const Polytope& P, double spacing, std::vector<Face>& out);

struct Ball {
  Point center;
  double radius = 0;
};

class ConvexBody {
 public:
  enum class Kind { Polytope, Ball, Combo };

  static ConvexBody polytope(Polytope P);
  static ConvexBody ball(Point center, double radius);
  // a*A + b*B with a, b >= 0.
  static ConvexBody combo(double a, const ConvexBody& A, double b, const ConvexBody& B);

  Kind kind() const;
  int dim() const;
  const Polytope& as_polytope() const;
  const Ball& as_ball() const;
  double coef(int k) const;
  const ConvexBody& part(int k) const;

  double support(const double* theta) const;
  double support(const Point& theta) const { return support(theta.data()); }

  ConvexBody scaled(double rho) const;
  ConvexBody translated(const Point& z) const;

  nlohmann::json to_json() const;
  static ConvexBody from_json(const nlohmann::json& j);

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

// Checked support function: direction must be a unit vector (1e-12).
double support_function(const ConvexBody& body, const Point& direction);

struct HausdorffResult {
  double distance = 0;
  int grid_size = 0;
};
HausdorffResult hausdorff_distance(const ConvexBody& a, const ConvexBody& b,
                                   const std::vector<Dir>& grid);

struct Radii {
  double r_in = 0, r_out = 0;
  Point chebyshev_center;
};
Radii inner_outer_radius(const ConvexBody& body);

std::vector<Face> gauss_faces(const Polytope& P, double spacing = 0.1);

// Exact polytope + ball decomposition of a (possibly nested) combination.
// Polytope parts are summed exactly; balls collapse to one.
class Shape {
 public:
  static Shape realize(const ConvexBody& body);

  int dim() const { return n_; }
  // Polytope core, already translated into place; absent for a ball.
  bool has_core() const { return core_.has_value(); }
  const Polytope& core() const { return *core_; }
  double radius() const { return radius_; }
  const Point& center() const { return center_; }

  // Negative inside, exact Euclidean distance to the boundary.
  double signed_distance(const double* x) const;
  // Fraction of the segment out -> in at which the boundary is met,
  // with out outside and in inside.
  double exit_fraction(const double* out, const double* in) const;
  // Nearest boundary point and outward unit normal there. Inside the core
  // the normal of the nearest face is used.
  void nearest(const double* x, double* point, double* normal) const;
  // Weights over core constraints for the feature nearest to x (sum 1).
  // Empty for a ball.
  void feature_weights(const double* x, std::vector<std::pair<int, double>>& w) const;

  double support(const double* theta) const;
  void bounding_box(double* lo, double* hi) const;
  Radii radii() const;

 private:
  // Nearest point of the core to x (x outside the core); returns distance.
  double nearest_core(const double* x, double* point) const;

  int n_ = 0;
  std::optional<Polytope> core_;
  Point center_;  // ball center when there is no core
  double radius_ = 0;
};

Polytope minkowski_sum(const std::vector<std::pair<double, const Polytope*>>& parts);

}  // namespace capmink
