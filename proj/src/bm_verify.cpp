#include "capmink/bm_verify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <Eigen/Dense>

#include "capmink/error.hpp"
#include "capmink/measure.hpp"

namespace capmink {

namespace {

// a E + b F, skipping vanishing coefficients
ConvexBody blend(double a, const ConvexBody& E, double b, const ConvexBody& F) {
  if (b == 0) return a == 1 ? E : E.scaled(a);
  if (a == 0) return b == 1 ? F : F.scaled(b);
  return ConvexBody::combo(a, E, b, F);
}

// Deviation of m_j below the chord of its neighbours, with the matching bar.
void concavity(const std::vector<double>& t, const std::vector<double>& m, const std::vector<double>& bar,
               double& defect, double& defect_bar) {
  defect = -1e300;
  defect_bar = 0;
  if (t.size() < 3) {
    defect = 0;
    return;
  }
  for (size_t j = 1; j + 1 < t.size(); ++j) {
    double a = (t[j + 1] - t[j]) / (t[j + 1] - t[j - 1]), b = 1 - a;
    double d = a * m[j - 1] + b * m[j + 1] - m[j];
    if (d > defect) {
      defect = d;
      defect_bar = a * bar[j - 1] + b * bar[j + 1] + bar[j];
    }
  }
}

const char* representation_of(const ConvexBody& a, const ConvexBody& b) {
  bool pa = a.kind() == ConvexBody::Kind::Polytope, pb = b.kind() == ConvexBody::Kind::Polytope;
  if (pa && pb) return "exact polytope sum";
  return "exact sum: polytope core plus ball radius";
}

}  // namespace

MValue m_value(const CapacitarySolution& sol) {
  const double e = sol.structure->dim() - sol.structure->p();
  MValue v;
  v.cap = sol.capacity_energy;
  v.cap_bar = sol.error_bar();
  v.m = std::pow(v.cap, 1 / e);
  v.m_bar = v.m * v.cap_bar / (e * v.cap);
  return v;
}

nlohmann::json BMReport::to_json() const {
  return {{"lambda_grid", lambdas},
          {"lhs_values", lhs},
          {"rhs_values", rhs},
          {"slack", slack},
          {"error_bar", error_bar},
          {"capacities", capacities},
          {"capacity_bars", capacity_bars},
          {"cap1", cap1},
          {"cap2", cap2},
          {"cap1_bar", cap1_bar},
          {"cap2_bar", cap2_bar},
          {"min_slack", min_slack},
          {"min_slack_bar", min_slack_bar},
          {"nonnegative", nonnegative},
          {"significant", significant},
          {"concavity_defect", concavity_defect},
          {"concavity_bar", concavity_bar},
          {"representation", representation}};
}

void BMReport::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::Domain, "cannot write " + path);
  f.precision(12);
  f << "lambda,lhs,rhs,slack,error_bar\n";
  for (size_t i = 0; i < lambdas.size(); ++i)
    f << lambdas[i] << ',' << lhs[i] << ',' << rhs[i] << ',' << slack[i] << ',' << error_bar[i] << '\n';
}

BMReport verify_bm(std::shared_ptr<const FundamentalSolution> F, const ConvexBody& E1, const ConvexBody& E2,
                   const std::vector<double>& lambdas, const SolverConfig& cfg) {
  for (double l : lambdas)
    if (!(l >= 0 && l <= 1)) fail(ErrorCode::Domain, "lambda must lie in [0, 1]");
  BMReport r;
  r.representation = representation_of(E1, E2);
  MValue m1 = m_value(solve_capacitary(F, E1, cfg));
  MValue m2 = m_value(solve_capacitary(F, E2, cfg));
  r.cap1 = m1.cap;
  r.cap2 = m2.cap;
  r.cap1_bar = m1.cap_bar;
  r.cap2_bar = m2.cap_bar;
  std::vector<double> ts = {0}, ms = {m2.m}, bars = {m2.m_bar};
  r.min_slack = 1e300;
  r.nonnegative = true;
  for (double l : lambdas) {
    MValue v;
    if (l == 0) v = m2;
    else if (l == 1) v = m1;
    else v = m_value(solve_capacitary(F, blend(l, E1, 1 - l, E2), cfg));
    double rhs = l * m1.m + (1 - l) * m2.m;
    double bar = v.m_bar + l * m1.m_bar + (1 - l) * m2.m_bar;
    double slack = v.m - rhs;
    r.lambdas.push_back(l);
    r.lhs.push_back(v.m);
    r.rhs.push_back(rhs);
    r.slack.push_back(slack);
    r.error_bar.push_back(bar);
    r.capacities.push_back(v.cap);
    r.capacity_bars.push_back(v.cap_bar);
    if (slack < r.min_slack) {
      r.min_slack = slack;
      r.min_slack_bar = bar;
    }
    if (slack < -bar) r.nonnegative = false;
    if (slack > bar) r.significant = true;
    if (l > 0 && l < 1) {
      ts.push_back(l);
      ms.push_back(v.m);
      bars.push_back(v.m_bar);
    }
  }
  ts.push_back(1);
  ms.push_back(m1.m);
  bars.push_back(m1.m_bar);
  std::vector<size_t> idx(ts.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return ts[a] < ts[b]; });
  std::vector<double> t2, m2v, b2;
  for (size_t i : idx) {
    t2.push_back(ts[i]);
    m2v.push_back(ms[i]);
    b2.push_back(bars[i]);
  }
  concavity(t2, m2v, b2, r.concavity_defect, r.concavity_bar);
  return r;
}

nlohmann::json HadamardReport::to_json() const {
  return {{"t0", t0},
          {"deltas", deltas},
          {"differences", differences},
          {"extrapolated", extrapolated},
          {"predicted", predicted},
          {"rel_error", rel_error},
          {"rel_errors", rel_errors},
          {"measure_method", measure_method},
          {"capacity", capacity}};
}

HadamardReport verify_hadamard(std::shared_ptr<const FundamentalSolution> F, const ConvexBody& E1,
                               const ConvexBody& E2, double t0, const std::vector<double>& deltas,
                               const SolverConfig& cfg) {
  const int n = E2.dim();
  if (deltas.empty()) fail(ErrorCode::Domain, "need at least one delta");
  for (auto& d : direction_grid(n, 1280))
    if (!(E2.support(d.v) > 0)) fail(ErrorCode::Domain, "E2 must contain the origin in its interior");
  double dmax = 0;
  for (double d : deltas) {
    if (!(d > 0) || t0 - d < 0) fail(ErrorCode::Domain, "deltas must be positive and keep t0 - delta >= 0");
    dmax = std::max(dmax, d);
  }
  auto body = [&](double t) { return blend(1, E1, t, E2); };
  SolverConfig c = cfg;
  if (!c.frame) {
    std::vector<GridFrame> fr;
    for (double t : {t0 - dmax, t0 + dmax}) fr.push_back(make_frame(Shape::realize(body(t)), cfg.r_out_factor, cfg.core_margin));
    c.frame = merge_frames(fr);
  }
  HadamardReport r;
  r.t0 = t0;
  auto base = solve_capacitary(F, body(t0), c);
  r.capacity = base.capacity_energy;
  const double p = F->structure().p();
  Shape sh = Shape::realize(body(t0));
  if (sh.has_core() && sh.radius() == 0) {
    // polytope: face masses against the support of E2 at the face normals
    SurfaceMeasure mu = face_measure(base, sh.core());
    double s = 0;
    for (auto& a : mu.atoms) s += E2.support(a.xi.data()) * a.mass;
    r.predicted = (p - 1) * s;
    r.measure_method = "face masses";
  } else {
    r.predicted = (p - 1) * support_integral(base, E2);
    r.measure_method = "volume identity";
  }
  std::vector<double> ds = deltas;
  std::sort(ds.begin(), ds.end());
  for (double d : ds) {
    auto up = solve_capacitary(F, body(t0 + d), c, &base);
    auto dn = solve_capacitary(F, body(t0 - d), c, &base);
    double D = (up.capacity_energy - dn.capacity_energy) / (2 * d);
    r.deltas.push_back(d);
    r.differences.push_back(D);
    r.rel_errors.push_back(std::abs(D - r.predicted) / std::abs(r.predicted));
  }
  if (ds.size() >= 2) {
    double d1 = ds[0], d2 = ds[1];
    r.extrapolated = (d2 * d2 * r.differences[0] - d1 * d1 * r.differences[1]) / (d2 * d2 - d1 * d1);
  } else {
    r.extrapolated = r.differences[0];
  }
  r.rel_error = std::abs(r.extrapolated - r.predicted) / std::abs(r.predicted);
  return r;
}

nlohmann::json LawsReport::to_json() const {
  return {{"cap", cap},
          {"cap_bar", cap_bar},
          {"rhos", rhos},
          {"scaled_caps", scaled_caps},
          {"scaling_ratios", scaling_ratios},
          {"scaling_tols", scaling_tols},
          {"shift", shift},
          {"shifted_cap", shifted_cap},
          {"translation_ratio", translation_ratio},
          {"translation_tol", translation_tol},
          {"radii", radii},
          {"ball_caps", ball_caps},
          {"ball_exponent", ball_exponent},
          {"scaling_ok", scaling_ok},
          {"translation_ok", translation_ok},
          {"ball_ok", ball_ok},
          {"pass", pass}};
}

LawsReport verify_laws(std::shared_ptr<const FundamentalSolution> F, const ConvexBody& E, const SolverConfig& cfg,
                       std::uint64_t seed, const std::vector<double>& rhos) {
  const int n = E.dim();
  const double p = F->structure().p();
  LawsReport r;
  auto base = solve_capacitary(F, E, cfg);
  r.cap = base.capacity_energy;
  r.cap_bar = base.error_bar();
  const double rb = r.cap_bar / r.cap;
  r.scaling_ok = true;
  for (double rho : rhos) {
    auto s = solve_capacitary(F, E.scaled(rho), cfg);
    double ratio = s.capacity_energy / (std::pow(rho, n - p) * r.cap);
    double tol = 2 * std::max(rb, s.error_bar() / s.capacity_energy);
    r.rhos.push_back(rho);
    r.scaled_caps.push_back(s.capacity_energy);
    r.scaling_ratios.push_back(ratio);
    r.scaling_tols.push_back(tol);
    if (std::abs(ratio - 1) > tol) r.scaling_ok = false;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  const double rin = inner_outer_radius(E).r_in;
  r.shift.assign(n, 0.0);
  for (auto& z : r.shift) z = U(rng) * rin;
  auto t = solve_capacitary(F, E.translated(r.shift), cfg);
  r.shifted_cap = t.capacity_energy;
  r.translation_ratio = t.capacity_energy / r.cap;
  r.translation_tol = 2 * std::max(rb, t.error_bar() / t.capacity_energy);
  r.translation_ok = std::abs(r.translation_ratio - 1) <= r.translation_tol;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double R : {0.5, 1.0, 2.0}) {
    auto b = solve_capacitary(F, ConvexBody::ball(Point(n, 0.0), R), cfg);
    r.radii.push_back(R);
    r.ball_caps.push_back(b.capacity_energy);
    double x = std::log(R), y = std::log(b.capacity_energy);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double k = 3;
  r.ball_exponent = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  r.ball_ok = std::abs(r.ball_exponent - (n - p)) <= 0.05;
  r.pass = r.scaling_ok && r.translation_ok && r.ball_ok;
  return r;
}

nlohmann::json MatrixLemmaReport::to_json() const {
  return {{"trials", trials},
          {"dim", dim},
          {"violations", violations},
          {"worst_violation", worst_violation},
          {"min_relative_slack", min_relative_slack},
          {"equality_residual", equality_residual},
          {"identity_residual", identity_residual},
          {"pass", pass}};
}

MatrixLemmaReport matrix_lemma_test(int trials, int dim, std::uint64_t seed) {
  if (trials < 1 || dim < 1) fail(ErrorCode::Domain, "need trials >= 1 and dim >= 1");
  using Mat = Eigen::MatrixXd;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0, 1);
  std::uniform_real_distribution<double> U(0, 1);
  // random eigenbasis, log-uniform spectrum in [e^-3, e^3]; the condition
  // number stays below e^6 so rounding cannot mask an equality
  auto spd = [&]() {
    Mat A(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) A(i, j) = N(rng);
    Mat Q = Eigen::HouseholderQR<Mat>(A).householderQ();
    Eigen::VectorXd ev(dim);
    for (int i = 0; i < dim; ++i) ev(i) = std::exp(6 * U(rng) - 3);
    Mat H = Q * ev.asDiagonal() * Q.transpose();
    return Mat(0.5 * (H + H.transpose()));
  };
  auto trinv = [](const Mat& H) { return H.ldlt().solve(Mat::Identity(H.rows(), H.cols())).trace(); };
  auto sides = [&](const Mat& H1, const Mat& H2, double r, double s, double l, double& lhs, double& rhs) {
    lhs = std::pow(l * s + (1 - l) * r, 2) * trinv(l * H1 + (1 - l) * H2);
    rhs = l * s * s * trinv(H1) + (1 - l) * r * r * trinv(H2);
  };
  MatrixLemmaReport rep;
  rep.trials = trials;
  rep.dim = dim;
  rep.min_relative_slack = 1e300;
  for (int k = 0; k < trials; ++k) {
    Mat H1 = spd(), H2 = spd();
    double r = 0.1 + 10 * U(rng), s = 0.1 + 10 * U(rng), l = U(rng);
    double lhs, rhs;
    sides(H1, H2, r, s, l, lhs, rhs);
    double rel = (rhs - lhs) / rhs;
    if (rel < -1e-10) {
      ++rep.violations;
      rep.worst_violation = std::max(rep.worst_violation, -rel);
    }
    rep.min_relative_slack = std::min(rep.min_relative_slack, rel);
    // equality case r H1 = s H2
    sides(H1, (r / s) * H1, r, s, l, lhs, rhs);
    rep.equality_residual = std::max(rep.equality_residual, std::abs(lhs - rhs) / rhs);
  }
  Mat I = Mat::Identity(dim, dim);
  double lhs, rhs;
  sides(I, I, 1.5, 1.5, 0.3, lhs, rhs);
  rep.identity_residual = std::abs(lhs - rhs) / rhs;
  rep.pass = rep.violations == 0 && rep.equality_residual <= 1e-10 && rep.identity_residual <= 1e-14;
  return rep;
}

nlohmann::json ConcavityReport::to_json() const {
  return {{"t", t}, {"m", m}, {"m_error", m_error}, {"defect", defect}, {"defect_bar", defect_bar}, {"concave", concave}};
}

ConcavityReport concavity_probe(std::shared_ptr<const FundamentalSolution> F, const ConvexBody& Ea,
                                const ConvexBody& Eb, const std::vector<double>& ts, const SolverConfig& cfg) {
  ConcavityReport r;
  std::vector<double> t = ts;
  std::sort(t.begin(), t.end());
  for (double x : t) {
    if (!(x >= 0 && x <= 1)) fail(ErrorCode::Domain, "t must lie in [0, 1]");
    MValue v = m_value(solve_capacitary(F, blend(1 - x, Ea, x, Eb), cfg));
    r.t.push_back(x);
    r.m.push_back(v.m);
    r.m_error.push_back(v.m_bar);
  }
  concavity(r.t, r.m, r.m_error, r.defect, r.defect_bar);
  r.concave = r.defect <= r.defect_bar;
  return r;
}

}  // namespace capmink
