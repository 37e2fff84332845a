#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "capmink/convex.hpp"
#include "capmink/discretization.hpp"
#include "capmink/grid.hpp"
#include "capmink/structure.hpp"

namespace capmink {

struct SolverConfig {
  double h = 1.0 / 8;
  double r_out_factor = 8;
  double tolerance = 1e-8;
  std::vector<double> eps_schedule = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  int matching_rounds = 3;
  int max_newton_iters = 60;
  int min_nodes_across = 4;
  double stretch = 1.1;
  double core_margin = 0.25;  // uniform band around the body, in body radii
  int coarse_levels = -1;     // nested coarse solves; -1 picks automatically
  int max_cg_iters = 20000;
  bool verbose = false;
  std::optional<GridFrame> frame;  // fixed placement shared by several solves

  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are a schema error.
  static SolverConfig from_json(const nlohmann::json& j);
};

struct RoundInfo {
  double tau = 0;
  double capacity = 0;
  double drift = 0;  // relative change from the previous round
  int newton_iters = 0;
  long cg_iters = 0;
};

struct LevelCapacity {
  double h = 0;
  double energy = 0;
  double flux = 0;
};

struct CapacitarySolution {
  StructurePtr structure;
  std::shared_ptr<const FundamentalSolution> fundamental;
  std::shared_ptr<const Discretization> disc;
  ConvexBody body = ConvexBody::ball({0, 0, 0}, 1);
  std::vector<double> u;

  double capacity_energy = 0;
  double capacity_flux = 0;  // at level 1/2
  double discrepancy = 0;    // |energy - flux| / energy
  double residual_norm = 0;
  double regularization_eps = 0;
  double tau = 0;
  double tail_unit = 0;  // far-field energy per unit tau^p
  std::vector<RoundInfo> rounds;
  std::vector<LevelCapacity> levels;  // coarse to fine; last is this grid
  int newton_iters = 0;
  long cg_iters = 0;
  double seconds = 0;

  const Grid& grid() const { return disc->grid(); }
  // Coarse-grid capacity (spacing 2h) when a nested solve produced one.
  std::optional<double> coarse_capacity() const;
  // |energy - flux| plus the Richardson gap |C_h - C_2h|. The boundary
  // error is first order, so the gap is not shrunk.
  double error_bar() const;
  nlohmann::json to_json() const;
};

CapacitarySolution solve_capacitary(StructurePtr s, const ConvexBody& E, const SolverConfig& cfg,
                                    const CapacitarySolution* warm = nullptr);

// Same structure, precomputed fundamental solution (saves the quadrature).
CapacitarySolution solve_capacitary(std::shared_ptr<const FundamentalSolution> F, const ConvexBody& E,
                                    const SolverConfig& cfg, const CapacitarySolution* warm = nullptr);

double capacity_by_flux(const CapacitarySolution& sol, double t);

struct ConvexityLevel {
  double t = 0;
  int superlevel_nodes = 0;
  double max_penetration = 0;        // absolute depth
  double max_penetration_cells = 0;  // depth over the local cell size
  bool ok = false;
};
struct ConvexityReport {
  std::vector<ConvexityLevel> levels;
  bool ok = false;
  nlohmann::json to_json() const;
};
ConvexityReport check_level_convexity(const CapacitarySolution& sol, const std::vector<double>& levels);
// Same check on an arbitrary nodal field over the solution's grid.
ConvexityReport check_level_convexity(const CapacitarySolution& sol, const std::vector<double>& u,
                                      const std::vector<double>& levels);

struct RadialReport {
  double min_ratio = 0;  // min <grad u, (c-x)/|c-x|> |x-c| / u
  int samples = 0;
  double shell_lo = 0, shell_hi = 0;
  double grad_exponent = 0;   // fitted slope of log|grad u|
  double value_exponent = 0;  // fitted slope of log u
  double decay_c_min = 0, decay_c_max = 0;  // u^{p-1} / (Cap |x|^{p-n}) on the shell
  bool shell_valid = false;
  nlohmann::json to_json() const;
};
RadialReport check_radial_monotonicity(const CapacitarySolution& sol, const Point& center);

// Flat little-endian float64 nodal array plus a JSON header.
void export_solution(const CapacitarySolution& sol, const std::string& prefix);
// CSV slice through the grid plane nearest the pole (x,y,u).
void export_slice_csv(const CapacitarySolution& sol, const std::string& path);

// Isotropic capacity of the ball of radius R.
double ball_capacity(int n, double p, double R);

}  // namespace capmink
