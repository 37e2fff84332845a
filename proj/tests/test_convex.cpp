#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "capmink/convex.hpp"
#include "capmink/error.hpp"
#include "capmink/lp.hpp"
#include "capmink/sphere.hpp"
#include "oracles.hpp"

using namespace capmink;

namespace {

const std::vector<Point> kAxes = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

Polytope cube(double a) { return Polytope(kAxes, std::vector<double>(6, a)); }

Polytope simplex() {
  const double r = 1 / std::sqrt(3.0);
  return Polytope({{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}, {r, r, r}}, {0, 0, 0, r});
}

std::vector<std::array<double, 3>> as_arrays(const std::vector<Point>& N) {
  std::vector<std::array<double, 3>> out;
  for (auto& v : N) {
    double l = std::hypot(v[0], v[1], v[2]);
    out.push_back({v[0] / l, v[1] / l, v[2] / l});
  }
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

Point random_unit3(std::mt19937_64& rng) {
  std::normal_distribution<double> N(0, 1);
  Point x = {N(rng), N(rng), N(rng)};
  double l = std::hypot(x[0], x[1], x[2]);
  for (double& c : x) c /= l;
  return x;
}

}  // namespace

TEST_CASE("support function examples") {
  auto ball = ConvexBody::ball({0, 0, 0}, 1.7);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 50; ++k) CHECK(support_function(ball, random_unit3(rng)) == doctest::Approx(1.7));

  const double s = 1 / std::sqrt(3.0);
  auto C = ConvexBody::polytope(cube(1));
  // vertex enumeration oracle: max over the brute-force vertices
  auto V = oracle::vertices3(as_arrays(kAxes), std::vector<double>(6, 1));
  CHECK(V.size() == 8);
  double ref = -1e300;
  for (auto& v : V) ref = std::max(ref, s * (v[0] + v[1] + v[2]));
  CHECK(support_function(C, {s, s, s}) == doctest::Approx(ref).epsilon(1e-12));
  CHECK(ref == doctest::Approx(std::sqrt(3.0)));

  auto combo = ConvexBody::combo(0.3, ConvexBody::ball({0, 0, 0}, 2), 0.7, ConvexBody::ball({0, 0, 0}, 0.5));
  for (int k = 0; k < 20; ++k) CHECK(support_function(combo, random_unit3(rng)) == doctest::Approx(0.3 * 2 + 0.7 * 0.5));

  CHECK(code_of([&] { support_function(C, {1, 1, 0}); }) == ErrorCode::Domain);
  Polytope open({{0, 0, 1}, {1, 0, 1}, {-1, 0, 1}}, {1, 1, 1});
  CHECK_FALSE(open.bounded());
  CHECK(code_of([&] { open.support(Point{1, 0, 0}.data()); }) == ErrorCode::Unbounded);
}

TEST_CASE("support function properties") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.3, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Point> N;
    std::vector<double> q;
    for (int i = 0; i < 14; ++i) {
      N.push_back(random_unit3(rng));
      q.push_back(U(rng));
    }
    for (auto& a : kAxes) {
      N.push_back(a);
      q.push_back(U(rng));
    }
    Polytope P(N, q);
    REQUIRE(P.bounded());
    // every vertex feasible; support at an active normal equals its height
    for (auto& v : P.vertices())
      for (size_t i = 0; i < N.size(); ++i) CHECK(v[0] * N[i][0] + v[1] * N[i][1] + v[2] * N[i][2] <= q[i] + 1e-9);
    for (size_t i = 0; i < N.size(); ++i) {
      double h = P.support(N[i].data());
      CHECK(h <= q[i] + 1e-12);
      if (P.face_of(int(i))) CHECK(h == doctest::Approx(q[i]).epsilon(1e-10));
    }
    auto body = ConvexBody::polytope(P);
    for (int k = 0; k < 20; ++k) {
      Point a = random_unit3(rng), b = random_unit3(rng), c(3);
      for (int d = 0; d < 3; ++d) c[d] = a[d] + b[d];
      double t = 2.5;
      Point ta = {t * a[0], t * a[1], t * a[2]};
      CHECK(P.support(c.data()) <= P.support(a.data()) + P.support(b.data()) + 1e-12);
      CHECK(P.support(ta.data()) == doctest::Approx(t * P.support(a.data())).epsilon(1e-12));
      // membership consistent with the support function
      Point x = {0.5 * a[0], 0.5 * a[1], 0.5 * a[2]};
      bool inside = true;
      for (auto& th : direction_grid(3, 320)) {
        double pt[3] = {th[0], th[1], th[2]};
        inside = inside && x[0] * pt[0] + x[1] * pt[1] + x[2] * pt[2] <= P.support(pt) + 1e-12;
      }
      if (P.contains(x.data(), 0)) CHECK(inside);
    }
  }
}

TEST_CASE("Minkowski sums add support functions") {
  std::mt19937_64 rng(3);
  Polytope A = cube(0.5), B = simplex();
  auto S = minkowski_sum({{0.4, &A}, {1.3, &B}});
  auto mixed = ConvexBody::combo(0.4, ConvexBody::polytope(A), 0.6, ConvexBody::ball({0.1, 0, 0}, 0.7));
  for (int k = 0; k < 200; ++k) {
    Point t = random_unit3(rng);
    CHECK(S.support(t.data()) == doctest::Approx(0.4 * A.support(t.data()) + 1.3 * B.support(t.data())).epsilon(1e-10));
    CHECK(mixed.support(t) == doctest::Approx(0.4 * A.support(t.data()) + 0.6 * (0.1 * t[0] + 0.7)).epsilon(1e-12));
  }
}

TEST_CASE("Hausdorff distance") {
  auto grid = direction_grid(3, 1280);
  auto C = ConvexBody::polytope(cube(1));
  CHECK(hausdorff_distance(C, C, grid).distance == doctest::Approx(0).scale(1));
  auto b1 = ConvexBody::ball({0, 0, 0}, 1), b2 = ConvexBody::ball({0, 0, 0}, 2);
  CHECK(hausdorff_distance(b1, b2, grid).distance == doctest::Approx(1));
  CHECK(hausdorff_distance(b1, b2, grid).grid_size == int(grid.size()));

  // one face pushed out by 0.1; the support difference peaks on its normal
  auto C2 = ConvexBody::polytope(Polytope(kAxes, {1.1, 1, 1, 1, 1, 1}));
  double ref = 0;
  for (auto& a : kAxes) ref = std::max(ref, std::abs(C2.support(a) - C.support(a)));
  CHECK(ref == doctest::Approx(0.1));
  CHECK(hausdorff_distance(C, C2, grid).distance == doctest::Approx(ref).epsilon(0.02));

  // metric on a sampled family
  std::vector<ConvexBody> fam = {C, C2, b1, b2, ConvexBody::polytope(simplex()), ConvexBody::ball({0.3, 0, 0}, 0.8)};
  for (auto& a : fam)
    for (auto& b : fam) {
      double ab = hausdorff_distance(a, b, grid).distance;
      CHECK(ab == doctest::Approx(hausdorff_distance(b, a, grid).distance));
      for (auto& c : fam)
        CHECK(hausdorff_distance(a, c, grid).distance <= ab + hausdorff_distance(b, c, grid).distance + 1e-12);
    }
}

TEST_CASE("faces and areas") {
  auto faces = gauss_faces(cube(1));
  CHECK(faces.size() == 6);
  for (auto& f : faces) {
    CHECK(f.area == doctest::Approx(4));
    double w = 0;
    for (double x : f.weights) w += x;
    CHECK(w == doctest::Approx(4));
  }

  Polytope S = simplex();
  auto N = as_arrays(S.normals());
  auto V = oracle::vertices3(N, S.heights());
  CHECK(V.size() == 4);
  auto sf = gauss_faces(S);
  CHECK(sf.size() == 4);
  for (auto& f : sf) {
    std::vector<std::array<double, 3>> on;
    const auto& n = N[f.index];
    for (auto& v : V)
      if (std::abs(v[0] * n[0] + v[1] * n[1] + v[2] * n[2] - S.heights()[f.index]) < 1e-9) on.push_back(v);
    CHECK(f.area == doctest::Approx(oracle::polygon_area(on, n)).epsilon(1e-12));
  }

  // raising a height until its face disappears removes the face
  std::vector<Point> n7 = kAxes;
  n7.push_back({1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0});
  std::vector<double> q7(6, 1.0);
  q7.push_back(1.2);
  CHECK(gauss_faces(Polytope(n7, q7)).size() == 7);
  q7.back() = std::sqrt(2.0) + 1e-9;
  CHECK(gauss_faces(Polytope(n7, q7)).size() == 6);
  CHECK(Polytope(n7, q7).face_of(6) == nullptr);

  Polytope flat(kAxes, {1, 1, 1, 1, 0, 0});
  CHECK_FALSE(flat.full_dimensional());
  CHECK(code_of([&] { gauss_faces(flat); }) == ErrorCode::DegenerateBody);
}

TEST_CASE("inner and outer radii") {
  auto rb = inner_outer_radius(ConvexBody::ball({0, 0, 0}, 1.3));
  CHECK(rb.r_in == doctest::Approx(1.3));
  CHECK(rb.r_out == doctest::Approx(1.3));
  auto rc = inner_outer_radius(ConvexBody::polytope(cube(1)));
  CHECK(rc.r_in == doctest::Approx(1));
  CHECK(rc.r_out == doctest::Approx(std::sqrt(3.0)));

  Polytope S = simplex();
  auto rs = inner_outer_radius(ConvexBody::polytope(S));
  double ref = oracle::inradius3(as_arrays(S.normals()), S.heights(), {0.2, 0.2, 0.2}, 0.5);
  CHECK(rs.r_in == doctest::Approx(ref).epsilon(1e-7));
  double vmax = 0;
  for (auto& v : oracle::vertices3(as_arrays(S.normals()), S.heights())) vmax = std::max(vmax, std::hypot(v[0], v[1], v[2]));
  CHECK(rs.r_out == doctest::Approx(vmax));
}

TEST_CASE("linear programs") {
  // max x + y subject to x + 2y <= 4, 3x + y <= 6
  auto r = lp_maximize({1, 2, 3, 1}, {4, 6}, {1, 1}, false);
  REQUIRE(r.status == LPResult::Optimal);
  CHECK(r.value == doctest::Approx(2.8));
  auto u = lp_maximize({-1, 0}, {0}, {1}, true);
  CHECK(u.status == LPResult::Unbounded);
  auto inf = lp_maximize({1, -1}, {-1, -1}, {1}, true);
  CHECK(inf.status == LPResult::Infeasible);
}

TEST_CASE("shape distances and exit fractions") {
  auto sh = Shape::realize(ConvexBody::polytope(cube(1)));
  double x[3] = {2, 0.5, 0}, y[3] = {1.5, 1.5, 1.5}, z[3] = {0.2, 0.1, 0};
  CHECK(sh.signed_distance(x) == doctest::Approx(1));
  CHECK(sh.signed_distance(y) == doctest::Approx(std::sqrt(0.75)));
  CHECK(sh.signed_distance(z) == doctest::Approx(-0.8));
  double o[3] = {3, 0, 0}, i[3] = {0, 0, 0};
  CHECK(sh.exit_fraction(o, i) == doctest::Approx(2.0 / 3));

  auto rounded = Shape::realize(ConvexBody::combo(1, ConvexBody::polytope(cube(1)), 1, ConvexBody::ball({0, 0, 0}, 0.5)));
  CHECK(rounded.signed_distance(y) == doctest::Approx(std::sqrt(0.75) - 0.5));
  double pt[3], nu[3];
  rounded.nearest(x, pt, nu);
  CHECK(pt[0] == doctest::Approx(1.5));
  CHECK(nu[0] == doctest::Approx(1));
}

TEST_CASE("body JSON") {
  auto b = ConvexBody::from_json(nlohmann::json::parse(
      R"({"kind":"combo","lambda":0.25,"parts":[{"kind":"ball","center":[0,0,0],"radius":1},)"
      R"({"kind":"polytope","normals":[[1,0,0],[-1,0,0],[0,1,0],[0,-1,0],[0,0,1],[0,0,-1]],"heights":[1,1,1,1,1,1]}]})"));
  Point t = {0, 0, 1};
  CHECK(b.support(t) == doctest::Approx(0.25 + 0.75));
  auto c = ConvexBody::from_json(b.to_json());
  CHECK(c.support(t) == doctest::Approx(b.support(t)));
  CHECK(code_of([] { ConvexBody::from_json({{"kind", "torus"}}); }) == ErrorCode::Schema);
  CHECK(code_of([] { ConvexBody::from_json({{"kind", "ball"}, {"radius", 1}}); }) == ErrorCode::Schema);
}
