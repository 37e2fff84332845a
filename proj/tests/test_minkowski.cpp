#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "capmink/error.hpp"
#include "capmink/minkowski.hpp"
#include "oracles.hpp"

using namespace capmink;

namespace {

const std::vector<Point> kAxes = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

MinkowskiInstance octahedral(double p, double c = 1) {
  MinkowskiInstance inst;
  inst.directions = kAxes;
  inst.weights.assign(6, c);
  inst.structure = make_isotropic(3, p);
  return inst;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

}  // namespace

TEST_CASE("admissibility") {
  auto rep = validate_instance(octahedral(2));
  CHECK(rep.admissible);
  CHECK(rep.bounded_ok);
  CHECK(rep.centroid_defect == doctest::Approx(0).scale(1));
  CHECK(rep.antipodal.size() == 3);
  // min over theta of sum (theta . e_i)^+ over the octahedron is 1
  CHECK(rep.phi == doctest::Approx(1).epsilon(0.01));

  MinkowskiInstance hemi;
  hemi.structure = make_isotropic(3, 2);
  hemi.directions = {{0, 0, 1}, {1, 0, 1}, {-1, 0, 1}, {0, 1, 1}, {0, -1, 1}};
  hemi.weights.assign(5, 1);
  auto h = validate_instance(MinkowskiInstance::from_json(hemi.to_json()), 4000, 1e-4, false);
  CHECK_FALSE(h.bounded_ok);
  CHECK(h.phi == doctest::Approx(0).scale(1));
  CHECK(std::find(h.failed.begin(), h.failed.end(), "bounded") != h.failed.end());
  CHECK(code_of([&] { validate_instance(hemi); }) == ErrorCode::Inadmissible);

  auto off = octahedral(2);
  off.weights[0] = 1 + 2.0 / 3;  // |sum c xi| = 2/3 = 10% of sum c
  auto o = validate_instance(off, 4000, 1e-4, false);
  CHECK(o.centroid_defect == doctest::Approx(0.1));
  CHECK_FALSE(o.centroid_ok);
  CHECK_FALSE(o.admissible);
}

TEST_CASE("instance schema") {
  nlohmann::json j = octahedral(2).to_json();
  j["directions"][1] = {0, 0, 0};
  CHECK(code_of([&] { MinkowskiInstance::from_json(j); }) == ErrorCode::Schema);
  j = octahedral(2).to_json();
  j["weights"][2] = -1;
  CHECK(code_of([&] { MinkowskiInstance::from_json(j); }) == ErrorCode::Schema);
  j = octahedral(2).to_json();
  j["directions"][1] = j["directions"][0];
  CHECK(code_of([&] { MinkowskiInstance::from_json(j); }) == ErrorCode::Schema);
  CHECK(code_of([] { MinkowskiConfig::from_json({{"stepsize", 1}}); }) == ErrorCode::Schema);
}

TEST_CASE("octahedral instance recovers the cube at p = n - 1") {
  MinkowskiConfig cfg;
  cfg.solver.h = 1.0 / 8;
  auto sol = solve_minkowski(octahedral(2), cfg);
  CHECK(sol.converged);
  CHECK(sol.kkt_residual < 0.1);
  CHECK(sol.residual < 0.1);
  CHECK(sol.b_constant.has_value());
  CHECK_FALSE(sol.scale_phi.has_value());
  CHECK(*sol.b_constant == doctest::Approx(sol.gamma_value));
  CHECK(sol.monotone);
  CHECK(sol.max_feasibility_error <= cfg.cap_tol);
  CHECK(sol.containment_radius <= sol.containment_bound);
  CHECK(std::abs(sol.identity_ratio - 1) < 0.07);
  CHECK(sol.inactive.empty());

  // cube of capacity one: every height equal, centered at the origin
  auto [lo, hi] = std::minmax_element(sol.heights.begin(), sol.heights.end());
  CHECK(*hi - *lo < 3 * sol.grid_h / sol.working_scale);
  REQUIRE(sol.recovered_measure.atoms.size() == 6);
  for (auto& a : sol.recovered_measure.atoms) CHECK(std::abs(*sol.b_constant * a.mass - 1) < 0.1);
}

TEST_CASE("rescaled weights rescale the body") {
  // q is unchanged, gamma scales by s and the body by s^{1/(n-1-p)}
  MinkowskiConfig cfg;
  cfg.solver.h = 1.0 / 6;
  const double s = 1.5;
  auto a = solve_minkowski(octahedral(1.5), cfg);
  auto b = solve_minkowski(octahedral(1.5, s), cfg);
  REQUIRE(a.scale_phi.has_value());
  REQUIRE(b.scale_phi.has_value());
  CHECK(b.gamma_value / a.gamma_value == doctest::Approx(s).epsilon(0.05));
  const double want = std::pow(s, 1 / (3 - 1 - 1.5));
  CHECK(std::abs(*b.scale_phi / *a.scale_phi / want - 1) < 0.05);
  Point e1 = {1, 0, 0};
  CHECK(std::abs(b.final_body.support(e1) / a.final_body.support(e1) / want - 1) < 0.05);
}

TEST_CASE("Hadamard gradient on one face") {
  auto F = std::make_shared<const FundamentalSolution>(dual_support(make_isotropic(3, 2)));
  Polytope P(kAxes, {1, 1, 0.8, 1, 1.2, 1});
  SolverConfig cfg;
  cfg.h = 1.0 / 8;
  // below about h the forward difference follows the grid-position error of the face
  auto chk = face_gradient_check(F, P, 2, {0.4, 0.1}, cfg);
  for (double d : chk.differences) CHECK(std::abs(d / chk.predicted - 1) < 0.1);
  CHECK(code_of([&] { face_gradient_check(F, P, 2, {0.0}, cfg); }) == ErrorCode::Domain);
}
