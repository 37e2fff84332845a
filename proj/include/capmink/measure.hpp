#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "capmink/convex.hpp"
#include "capmink/pde.hpp"

namespace capmink {

struct Atom {
  Point xi;
  double mass = 0;
  int face = -1;                 // constraint index in the source polytope
  bool low_confidence = false;   // face too small for the grid
  double direction_error_deg = 0;  // mean -grad u / |grad u| against xi
};

// Atomic measure on the sphere. Masses use the density <A(grad u), grad u>
// on the boundary, so (p-1)/(n-p) * integral of h equals the capacity.
struct SurfaceMeasure {
  int n = 3;
  std::vector<Atom> atoms;
  double total_mass = 0;
  double capacity = 0;
  std::string method;
  nlohmann::json structure;
  nlohmann::json body;

  Point centroid() const;  // sum of mass * xi
  nlohmann::json to_json() const;
  static SurfaceMeasure from_json(const nlohmann::json& j);
};

enum class MeasureMethod { Domain, Trace };

struct MeasureOptions {
  MeasureMethod method = MeasureMethod::Domain;
  double cutoff = 0;  // band width of the domain identity; 0 picks one
};

// Face masses of the polytope the solution was computed for. offset is in
// grid cells and sets the trace distance (trace method and direction check).
SurfaceMeasure face_measure(const CapacitarySolution& sol, const Polytope& poly, double offset = 2,
                            const MeasureOptions& opt = {});

// Boundary integral of g(nu) against the capacitary measure, from the
// volume identity with a cut-off normal field.
double boundary_integral(const CapacitarySolution& sol, const std::function<double(const double*)>& g,
                         double cutoff = 0);
// Integral of the support function of K.
double support_integral(const CapacitarySolution& sol, const ConvexBody& K, double cutoff = 0);

// Integral of the solved body's own support function, with the smooth field
// psi * x in place of psi * nu.
double own_support_integral(const CapacitarySolution& sol, double cutoff = 0);

// Default band width of the volume identity.
double default_cutoff(const CapacitarySolution& sol);

// Flat (bounded-Lipschitz) distance between atomic measures on the sphere.
double bounded_lipschitz(const SurfaceMeasure& a, const SurfaceMeasure& b);

struct WeakConvergenceReport {
  std::vector<double> deltas;
  std::vector<double> distances;
  std::vector<double> capacities;
  double target_capacity = 0;
  double noise_floor = 0;
  bool monotone = false;
  nlohmann::json to_json() const;
};

// Height perturbations q_i (1 + delta_m w_i), delta_m = scale 2^-m, with a
// seeded pattern w_i in [-1, 1]; every body is solved on one shared frame.
WeakConvergenceReport weak_convergence_probe(std::shared_ptr<const FundamentalSolution> F, const Polytope& target,
                                             double scale, int steps, const SolverConfig& cfg,
                                             std::uint64_t seed = 7);

}  // namespace capmink
