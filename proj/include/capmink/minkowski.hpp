#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "capmink/convex.hpp"
#include "capmink/measure.hpp"
#include "capmink/pde.hpp"
#include "capmink/structure.hpp"

namespace capmink {

struct MinkowskiInstance {
  std::vector<Point> directions;  // unit vectors, pairwise distinct
  std::vector<double> weights;    // positive
  StructurePtr structure;

  int dim() const { return directions.empty() ? 0 : int(directions[0].size()); }
  nlohmann::json to_json() const;
  // Directions are normalized; a zero vector, duplicates or a nonpositive
  // weight are schema errors.
  static MinkowskiInstance from_json(const nlohmann::json& j);
};

struct AdmissibilityReport {
  int theta_count = 0;
  double phi = 0;             // min over theta of sum c_i <theta, xi_i>^+
  double spread = 0;          // min over theta of sum c_i |<theta, xi_i>|
  double centroid_defect = 0;  // |sum c_i xi_i| / sum c_i
  double centroid_tol = 0;
  std::vector<std::pair<int, int>> antipodal;  // warning only
  bool bounded_ok = false, centroid_ok = false;
  bool admissible = false;
  std::vector<std::string> failed;
  nlohmann::json to_json() const;
};

// With strict set, an inadmissible instance throws Inadmissible naming the
// failed conditions.
AdmissibilityReport validate_instance(const MinkowskiInstance& inst, int theta_count = 4000,
                                      double centroid_tol = 1e-4, bool strict = true);

struct MinkowskiConfig {
  SolverConfig solver;
  double kkt_tol = 0.05;
  int max_iters = 40;
  double cap_tol = 0.02;  // feasibility report threshold
  // Iterates live at the capacity of the ball of this radius, so the grid
  // spacing is relative to a body of roughly this size.
  double working_radius = 1;
  double initial_step = 0.1;  // first step, as a fraction of the mean height
  int max_backtracks = 4;
  std::optional<std::vector<double>> initial_heights;  // working frame
  double initial_perturbation = 0;  // heights times 1 + delta w_i, w_i in [-1, 1]
  std::uint64_t seed = 1;
  bool return_unconverged = false;
  std::string trace_csv;  // iteration, gamma, kkt_residual, ...

  nlohmann::json to_json() const;
  static MinkowskiConfig from_json(const nlohmann::json& j);
};

struct MinkowskiIterate {
  int iteration = 0;
  double gamma = 0;        // working frame, after renormalization
  double kkt_residual = 0;
  double tangent_residual = 0;  // with the projected multiplier
  double capacity = 0;     // before renormalization
  double step = 0;
  bool accepted = false;
};

struct MinkowskiSolution {
  std::vector<double> heights;  // q with Cap(E(q)) = 1, Chebyshev center at 0
  double gamma_value = 0;
  std::optional<double> scale_phi;   // p != n - 1
  std::optional<double> b_constant;  // p == n - 1
  ConvexBody final_body = ConvexBody::ball({0, 0, 0}, 1);
  SurfaceMeasure recovered_measure;
  double residual = 0;       // max_i |mass_i - c_i| / c_i (b mass_i for p = n - 1)
  double kkt_residual = 0;   // max_i |c_i - (p-1)/(n-p) gamma mass_i| / c_i
  double tangent_residual = 0;
  double identity_ratio = 0;  // (p-1)/(n-p) int h dmu / Cap
  std::vector<int> inactive;  // constraints without a face
  double containment_radius = 0;  // max |vertex| of E(q)
  double containment_bound = 0;   // gamma / phi
  bool converged = false;
  std::string stop_reason;  // kkt, stalled, stationary or budget
  int iterations = 0;
  double max_feasibility_error = 0;  // |Cap / target - 1| over accepted iterates
  bool monotone = true;              // gamma never increased across accepted steps
  double working_scale = 1;          // working body = working_scale * E(q)
  Polytope working_body;             // the last iterate in the working frame
  double grid_h = 0;                 // spacing used in the working frame
  std::vector<MinkowskiIterate> trace;
  AdmissibilityReport admissibility;
  double seconds = 0;

  MinkowskiSolution() : working_body({{1, 0, 0}}, {1}) {}
  nlohmann::json to_json() const;
};

MinkowskiSolution solve_minkowski(const MinkowskiInstance& inst, const MinkowskiConfig& cfg);

struct UniquenessReport {
  std::vector<MinkowskiSolution> runs;
  std::vector<double> hausdorff;        // pairwise, working frame
  std::vector<double> hausdorff_cells;  // the same in grid cells
  std::vector<double> t;
  std::vector<double> m;               // Cap((1-t)E_a + t E_b)^{1/(n-p)}
  std::vector<double> m_error;
  double concavity_defect = 0;          // max of the negated second difference
  double defect_bar = 0;
  nlohmann::json to_json() const;
};

UniquenessReport uniqueness_probe(const MinkowskiInstance& inst, int runs, const std::vector<std::uint64_t>& seeds,
                                  const MinkowskiConfig& cfg, double perturbation = 0.25);

struct FaceGradientCheck {
  int face = -1;
  double predicted = 0;  // (p-1) mass_j
  std::vector<double> deltas;
  std::vector<double> differences;  // [Cap(q + delta e_j) - Cap(q)] / delta
  nlohmann::json to_json() const;
};

// Forward differences of the capacity in one height against the measure.
FaceGradientCheck face_gradient_check(std::shared_ptr<const FundamentalSolution> F, const Polytope& P, int face,
                                      const std::vector<double>& deltas, const SolverConfig& cfg);

}  // namespace capmink
