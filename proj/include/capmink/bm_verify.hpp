#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "capmink/convex.hpp"
#include "capmink/pde.hpp"
#include "capmink/structure.hpp"

namespace capmink {

// m = Cap^{1/(n-p)} and its error bar from the capacity error bar.
struct MValue {
  double cap = 0, cap_bar = 0;
  double m = 0, m_bar = 0;
};
MValue m_value(const CapacitarySolution& sol);

struct BMReport {
  std::vector<double> lambdas;
  std::vector<double> lhs, rhs, slack, error_bar;
  std::vector<double> capacities, capacity_bars;  // of lambda E1 + (1-lambda) E2
  double cap1 = 0, cap2 = 0, cap1_bar = 0, cap2_bar = 0;
  double min_slack = 0;
  double min_slack_bar = 0;
  bool nonnegative = false;  // slack >= -bar at every lambda
  bool significant = false;  // slack > bar at some lambda
  double concavity_defect = 0;  // max negated second difference of lhs
  double concavity_bar = 0;
  std::string representation;

  nlohmann::json to_json() const;
  void write_csv(const std::string& path) const;
};

BMReport verify_bm(std::shared_ptr<const FundamentalSolution> F, const ConvexBody& E1, const ConvexBody& E2,
                   const std::vector<double>& lambdas, const SolverConfig& cfg);

struct HadamardReport {
  double t0 = 0;
  std::vector<double> deltas;
  std::vector<double> differences;  // central, per delta
  double extrapolated = 0;          // Richardson from the two smallest deltas
  double predicted = 0;             // (p-1) int h2 dmu at t0
  double rel_error = 0;             // extrapolated against predicted
  std::vector<double> rel_errors;   // per delta
  std::string measure_method;
  double capacity = 0;

  nlohmann::json to_json() const;
};

HadamardReport verify_hadamard(std::shared_ptr<const FundamentalSolution> F, const ConvexBody& E1,
                               const ConvexBody& E2, double t0, const std::vector<double>& deltas,
                               const SolverConfig& cfg);

struct LawsReport {
  double cap = 0, cap_bar = 0;
  std::vector<double> rhos, scaled_caps, scaling_ratios, scaling_tols;
  Point shift;
  double shifted_cap = 0, translation_ratio = 0, translation_tol = 0;
  std::vector<double> radii, ball_caps;
  double ball_exponent = 0;
  bool scaling_ok = false, translation_ok = false, ball_ok = false;
  bool pass = false;

  nlohmann::json to_json() const;
};

// Scaling and translation laws on E, and the ball exponent fit over radii
// {0.5, 1, 2}. Tolerances are twice the relative error bars.
LawsReport verify_laws(std::shared_ptr<const FundamentalSolution> F, const ConvexBody& E, const SolverConfig& cfg,
                       std::uint64_t seed, const std::vector<double>& rhos = {0.5, 2});

struct MatrixLemmaReport {
  int trials = 0, dim = 0;
  int violations = 0;
  double worst_violation = 0;  // max (lhs - rhs) / rhs
  double min_relative_slack = 0;
  double equality_residual = 0;  // constructed r H1 = s H2 cases
  double identity_residual = 0;  // H1 = H2 = I, r = s
  bool pass = false;

  nlohmann::json to_json() const;
};

MatrixLemmaReport matrix_lemma_test(int trials, int dim, std::uint64_t seed);

struct ConcavityReport {
  std::vector<double> t, m, m_error;
  double defect = 0;      // max over interior t of (m(t-) + m(t+))/2 - m(t)
  double defect_bar = 0;  // matching error bar
  bool concave = false;   // defect <= bar
  nlohmann::json to_json() const;
};

// m(t) = Cap((1-t) Ea + t Eb)^{1/(n-p)} on equally spaced t.
ConcavityReport concavity_probe(std::shared_ptr<const FundamentalSolution> F, const ConvexBody& Ea,
                                const ConvexBody& Eb, const std::vector<double>& ts, const SolverConfig& cfg);

}  // namespace capmink
