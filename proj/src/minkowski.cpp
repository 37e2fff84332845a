#include "capmink/minkowski.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "capmink/bm_verify.hpp"
#include "capmink/error.hpp"

namespace capmink {

namespace {

double dot(const double* a, const double* b, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

bool is_cotangent(double p, int n) { return std::abs(p - (n - 1)) < 1e-12; }

// Capacity and per-constraint masses of a solved polytope.
struct Eval {
  double cap = 0;
  std::vector<double> mass;
  SurfaceMeasure measure;
};

Eval evaluate(const CapacitarySolution& sol, const Polytope& P) {
  Eval e;
  e.cap = sol.capacity_energy;
  e.measure = face_measure(sol, P);
  e.mass.assign(P.size(), 0.0);
  for (auto& a : e.measure.atoms) e.mass[a.face] = a.mass;
  return e;
}

void write_trace(const std::string& path, const std::vector<MinkowskiIterate>& tr) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::Domain, "cannot write " + path);
  f.precision(12);
  f << "iteration,gamma,kkt_residual,tangent_residual,capacity,step,accepted\n";
  for (auto& t : tr)
    f << t.iteration << ',' << t.gamma << ',' << t.kkt_residual << ',' << t.tangent_residual << ',' << t.capacity
      << ',' << t.step << ',' << (t.accepted ? 1 : 0) << '\n';
}

}  // namespace

nlohmann::json MinkowskiInstance::to_json() const {
  nlohmann::json j = {{"directions", directions}, {"weights", weights}};
  if (structure) j["structure"] = structure->to_json();
  return j;
}

MinkowskiInstance MinkowskiInstance::from_json(const nlohmann::json& j) {
  MinkowskiInstance inst;
  if (!j.is_object()) fail(ErrorCode::Schema, "instance must be an object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "directions" && it.key() != "weights" && it.key() != "structure")
        fail(ErrorCode::Schema, "unknown instance key: " + it.key());
    inst.directions = j.at("directions").get<std::vector<Point>>();
    inst.weights = j.at("weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Schema, std::string("instance: ") + e.what());
  }
  if (!j.contains("structure")) fail(ErrorCode::Schema, "instance: missing structure");
  inst.structure = structure_from_json(j["structure"]);
  const size_t m = inst.directions.size();
  if (m == 0 || m != inst.weights.size()) fail(ErrorCode::Schema, "instance: directions and weights differ in length");
  const int n = int(inst.directions[0].size());
  if (n != inst.structure->dim()) fail(ErrorCode::Schema, "instance: direction dimension differs from the structure");
  for (auto& d : inst.directions) {
    if (int(d.size()) != n) fail(ErrorCode::Schema, "instance: directions of mixed dimension");
    double r = std::sqrt(dot(d.data(), d.data(), n));
    if (!(r > 0) || !std::isfinite(r)) fail(ErrorCode::Schema, "instance: zero direction");
    for (auto& x : d) x /= r;
  }
  for (size_t i = 0; i < m; ++i)
    for (size_t k = i + 1; k < m; ++k)
      if (dot(inst.directions[i].data(), inst.directions[k].data(), n) > 1 - 1e-12)
        fail(ErrorCode::Schema, "instance: directions must be pairwise distinct");
  for (double c : inst.weights)
    if (!(c > 0) || !std::isfinite(c)) fail(ErrorCode::Schema, "instance: weights must be positive");
  return inst;
}

nlohmann::json AdmissibilityReport::to_json() const {
  nlohmann::json ap = nlohmann::json::array();
  for (auto& [a, b] : antipodal) ap.push_back({a, b});
  return {{"theta_count", theta_count},
          {"phi", phi},
          {"spread", spread},
          {"centroid_defect", centroid_defect},
          {"centroid_tol", centroid_tol},
          {"antipodal_pairs", ap},
          {"antipodal_warning", !antipodal.empty()},
          {"bounded_ok", bounded_ok},
          {"centroid_ok", centroid_ok},
          {"admissible", admissible},
          {"failed", failed}};
}

AdmissibilityReport validate_instance(const MinkowskiInstance& inst, int theta_count, double centroid_tol,
                                      bool strict) {
  const int n = inst.dim();
  const size_t m = inst.directions.size();
  if (n < 2 || n > 3) fail(ErrorCode::Domain, "instances are supported for n = 2, 3");
  AdmissibilityReport r;
  r.centroid_tol = centroid_tol;
  if (int(m) < n + 1) {
    r.failed.push_back("direction_count");
    if (strict) fail(ErrorCode::Inadmissible, "inadmissible instance: fewer than n+1 directions");
    return r;
  }
  std::vector<Dir> grid = direction_grid(n, theta_count);
  // the directions and their opposites are natural extremal candidates
  for (auto& d : inst.directions)
    for (double sgn : {1.0, -1.0}) {
      Dir t;
      for (int k = 0; k < n; ++k) t[k] = sgn * d[k];
      grid.push_back(t);
    }
  r.theta_count = int(grid.size());
  r.phi = r.spread = 1e300;
  for (auto& t : grid) {
    double pos = 0, abs = 0;
    for (size_t i = 0; i < m; ++i) {
      double v = inst.weights[i] * dot(t.v, inst.directions[i].data(), n);
      pos += std::max(v, 0.0);
      abs += std::abs(v);
    }
    r.phi = std::min(r.phi, pos);
    r.spread = std::min(r.spread, abs);
  }
  // exact test: the normals positively span iff every such polytope is bounded
  Polytope probe(inst.directions, std::vector<double>(m, 1.0));
  r.bounded_ok = probe.bounded() && r.spread > 0;
  if (!probe.bounded()) r.phi = 0;
  double c[3] = {0, 0, 0}, total = 0;
  for (size_t i = 0; i < m; ++i) {
    total += inst.weights[i];
    for (int k = 0; k < n; ++k) c[k] += inst.weights[i] * inst.directions[i][k];
  }
  r.centroid_defect = std::sqrt(dot(c, c, n)) / total;
  r.centroid_ok = r.centroid_defect < centroid_tol;
  for (size_t i = 0; i < m; ++i)
    for (size_t k = i + 1; k < m; ++k)
      if (dot(inst.directions[i].data(), inst.directions[k].data(), n) < -1 + 1e-12)
        r.antipodal.push_back({int(i), int(k)});
  if (!r.bounded_ok) r.failed.push_back("bounded");
  if (!r.centroid_ok) r.failed.push_back("centroid");
  r.admissible = r.failed.empty();
  if (strict && !r.admissible) {
    std::string msg = "inadmissible instance:";
    for (auto& f : r.failed) msg += " " + f;
    fail(ErrorCode::Inadmissible, msg);
  }
  return r;
}

nlohmann::json MinkowskiConfig::to_json() const {
  nlohmann::json j = {{"solver", solver.to_json()},
                      {"kkt_tol", kkt_tol},
                      {"max_iters", max_iters},
                      {"cap_tol", cap_tol},
                      {"working_radius", working_radius},
                      {"initial_step", initial_step},
                      {"max_backtracks", max_backtracks},
                      {"initial_perturbation", initial_perturbation},
                      {"seed", seed},
                      {"return_unconverged", return_unconverged}};
  if (initial_heights) j["initial_heights"] = *initial_heights;
  if (!trace_csv.empty()) j["trace_csv"] = trace_csv;
  return j;
}

MinkowskiConfig MinkowskiConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::Schema, "minkowski config must be an object");
  MinkowskiConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const auto& v = it.value();
      if (k == "solver") c.solver = SolverConfig::from_json(v);
      else if (k == "kkt_tol") c.kkt_tol = v.get<double>();
      else if (k == "max_iters") c.max_iters = v.get<int>();
      else if (k == "cap_tol") c.cap_tol = v.get<double>();
      else if (k == "working_radius") c.working_radius = v.get<double>();
      else if (k == "initial_step") c.initial_step = v.get<double>();
      else if (k == "max_backtracks") c.max_backtracks = v.get<int>();
      else if (k == "initial_heights") c.initial_heights = v.get<std::vector<double>>();
      else if (k == "initial_perturbation") c.initial_perturbation = v.get<double>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "return_unconverged") c.return_unconverged = v.get<bool>();
      else if (k == "trace_csv") c.trace_csv = v.get<std::string>();
      else fail(ErrorCode::Schema, "unknown minkowski config key: " + k);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Schema, std::string("minkowski config: ") + e.what());
  }
  if (!(c.kkt_tol > 0) || c.max_iters < 0 || !(c.working_radius > 0) || !(c.initial_step > 0) ||
      c.max_backtracks < 0 || !(c.initial_perturbation >= 0 && c.initial_perturbation < 1))
    fail(ErrorCode::Schema, "minkowski config values out of range");
  return c;
}

nlohmann::json MinkowskiSolution::to_json() const {
  nlohmann::json tr = nlohmann::json::array();
  for (auto& t : trace)
    tr.push_back({{"iteration", t.iteration},
                  {"gamma", t.gamma},
                  {"kkt_residual", t.kkt_residual},
                  {"tangent_residual", t.tangent_residual},
                  {"capacity", t.capacity},
                  {"step", t.step},
                  {"accepted", t.accepted}});
  nlohmann::json j = {{"heights", heights},
                      {"gamma", gamma_value},
                      {"final_body", final_body.to_json()},
                      {"recovered_measure", recovered_measure.to_json()},
                      {"residual", residual},
                      {"kkt_residual", kkt_residual},
                      {"tangent_residual", tangent_residual},
                      {"identity_ratio", identity_ratio},
                      {"inactive", inactive},
                      {"containment_radius", containment_radius},
                      {"containment_bound", containment_bound},
                      {"converged", converged},
                      {"stop_reason", stop_reason},
                      {"iterations", iterations},
                      {"max_feasibility_error", max_feasibility_error},
                      {"monotone", monotone},
                      {"working_scale", working_scale},
                      {"working_heights", working_body.heights()},
                      {"grid_h", grid_h},
                      {"trace", tr},
                      {"admissibility", admissibility.to_json()},
                      {"seconds", seconds}};
  if (scale_phi) j["phi"] = *scale_phi;
  if (b_constant) j["b"] = *b_constant;
  return j;
}

MinkowskiSolution solve_minkowski(const MinkowskiInstance& inst, const MinkowskiConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  if (!inst.structure) fail(ErrorCode::Domain, "instance has no structure");
  const int n = inst.dim();
  const double p = inst.structure->p();
  const size_t m = inst.directions.size();
  if (!(p > 1 && p < n)) fail(ErrorCode::Domain, "need 1 < p < n");
  MinkowskiSolution out;
  out.admissibility = validate_instance(inst, 4000, 1e-4, true);
  out.grid_h = cfg.solver.h;

  auto F = std::make_shared<const FundamentalSolution>(dual_support(inst.structure));
  const std::vector<double>& c = inst.weights;
  const double target = ball_capacity(n, p, cfg.working_radius);
  const double e_cap = 1.0 / (n - p), e_mass = n - 1 - p;

  std::vector<double> q(m, cfg.working_radius);
  if (cfg.initial_heights) {
    if (cfg.initial_heights->size() != m) fail(ErrorCode::Domain, "initial heights differ in length from the instance");
    q = *cfg.initial_heights;
  } else if (cfg.initial_perturbation > 0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(-1, 1);
    for (double& v : q) v *= 1 + cfg.initial_perturbation * U(rng);
  }

  auto gamma_of = [&](const std::vector<double>& h) {
    double s = 0;
    for (size_t i = 0; i < m; ++i) s += c[i] * h[i];
    return s;
  };
  auto usable = [&](const Polytope& P) { return P.bounded() && P.full_dimensional(); };
  auto check_collapse = [&](const Polytope& P, double scale) {
    Radii r = Shape::realize(ConvexBody::polytope(P)).radii();
    if (scale * r.r_in < 2 * cfg.solver.h)
      fail(ErrorCode::DegenerateCollapse, "iterate inner radius fell below two grid cells");
  };

  Polytope P(inst.directions, q);
  if (!usable(P)) fail(ErrorCode::DegenerateBody, "initial heights give an empty or unbounded body");
  check_collapse(P, 1);
  CapacitarySolution sol = solve_capacitary(F, ConvexBody::polytope(P), cfg.solver);
  Eval ev = evaluate(sol, P);
  // move onto the working capacity level by the exact scaling law
  auto renormalize = [&](std::vector<double>& h, Eval& e) {
    double s = std::pow(target / e.cap, e_cap);
    for (double& v : h) v *= s;
    for (double& v : e.mass) v *= std::pow(s, e_mass);
    return s;
  };
  renormalize(q, ev);

  double alpha = -1;
  double last_gamma = 1e300;
  int it = 0;
  bool converged = false;
  for (;; ++it) {
    const double gamma = gamma_of(q);
    if (gamma > last_gamma * (1 + 1e-12)) out.monotone = false;
    last_gamma = gamma;
    std::vector<double> g(m);
    for (size_t i = 0; i < m; ++i) g[i] = (p - 1) * ev.mass[i];
    const double lam_kkt = gamma / ((n - p) * target);
    double cg = 0, gg = 0;
    for (size_t i = 0; i < m; ++i) {
      cg += c[i] * g[i];
      gg += g[i] * g[i];
    }
    const double lam = gg > 0 ? cg / gg : 0;
    double kkt = 0, tres = 0;
    for (size_t i = 0; i < m; ++i) {
      if (ev.mass[i] <= 0) continue;
      kkt = std::max(kkt, std::abs(c[i] - lam_kkt * g[i]) / c[i]);
      tres = std::max(tres, std::abs(c[i] - lam * g[i]) / c[i]);
    }
    MinkowskiIterate rec;
    rec.iteration = it;
    rec.gamma = gamma;
    rec.kkt_residual = kkt;
    rec.tangent_residual = tres;
    rec.capacity = ev.cap;
    rec.accepted = true;
    out.trace.push_back(rec);
    if (cfg.solver.verbose) fprintf(stderr, "[minkowski] it %d gamma %.8g kkt %.4g tangent %.4g\n", it, gamma, kkt, tres);
    if (kkt < cfg.kkt_tol) {
      converged = true;
      out.stop_reason = "kkt";
      break;
    }
    if (it >= cfg.max_iters) {
      out.stop_reason = "budget";
      break;
    }

    std::vector<double> d(m);
    double dmax = 0, qmean = 0;
    for (size_t i = 0; i < m; ++i) {
      d[i] = -(c[i] - lam * g[i]);
      dmax = std::max(dmax, std::abs(d[i]));
      qmean += std::abs(q[i]) / m;
    }
    if (!(dmax > 0)) {
      converged = true;
      out.stop_reason = "stationary";
      break;
    }
    if (alpha < 0) alpha = cfg.initial_step * qmean / dmax;
    bool accepted = false;
    for (int b = 0; b <= cfg.max_backtracks && !accepted; ++b, alpha *= 0.5) {
      std::vector<double> qt(m);
      for (size_t i = 0; i < m; ++i) qt[i] = q[i] + alpha * d[i];
      Polytope Pt(inst.directions, qt);
      if (!usable(Pt)) continue;
      check_collapse(Pt, 1);
      CapacitarySolution st = solve_capacitary(F, ConvexBody::polytope(Pt), cfg.solver, &sol);
      double s = std::pow(target / st.capacity_energy, e_cap);
      check_collapse(Pt, s);
      double gt = s * gamma_of(qt);
      MinkowskiIterate tr;
      tr.iteration = it;
      tr.gamma = gt;
      tr.capacity = st.capacity_energy;
      tr.step = alpha;
      tr.accepted = false;
      if (gt < gamma) {
        Eval et = evaluate(st, Pt);
        renormalize(qt, et);
        q = std::move(qt);
        ev = std::move(et);
        sol = std::move(st);
        accepted = true;
        out.trace.back().step = alpha;
        alpha *= 3;  // undone by the loop halving
      } else {
        out.trace.push_back(tr);
      }
    }
    if (!accepted) {
      // the first-order boundary error makes gamma slightly rough at the
      // grid scale; a stalled search at a small tangent residual is a
      // stationary point of the discrete problem
      converged = tres < cfg.kkt_tol;
      out.stop_reason = "stalled";
      break;
    }
  }
  out.iterations = it;

  // translation gauge, then one solve on the final working body
  Polytope W(inst.directions, q);
  Radii rw = Shape::realize(ConvexBody::polytope(W)).radii();
  for (size_t i = 0; i < m; ++i) q[i] -= dot(inst.directions[i].data(), rw.chebyshev_center.data(), n);
  W = Polytope(inst.directions, q);
  CapacitarySolution fin = solve_capacitary(F, ConvexBody::polytope(W), cfg.solver);
  Eval ef = evaluate(fin, W);
  out.max_feasibility_error = std::abs(ef.cap / target - 1);
  out.working_body = W;
  double hsum = 0;
  for (size_t i = 0; i < m; ++i) hsum += q[i] * ef.mass[i];
  out.identity_ratio = (p - 1) / (n - p) * hsum / ef.cap;

  // Cap(E(q_hat)) = 1
  const double S = std::pow(1.0 / ef.cap, e_cap);
  out.working_scale = 1 / S;
  out.heights.resize(m);
  for (size_t i = 0; i < m; ++i) out.heights[i] = S * q[i];
  out.gamma_value = gamma_of(out.heights);
  std::vector<double> mu(m);
  for (size_t i = 0; i < m; ++i) mu[i] = ef.mass[i] * std::pow(S, e_mass);
  const double kappa = (p - 1) / (n - p) * out.gamma_value;
  Polytope Eq(inst.directions, out.heights);
  double mscale = 1, cap_final = 1;
  if (is_cotangent(p, n)) {
    out.b_constant = kappa;
    out.final_body = ConvexBody::polytope(Eq);
  } else {
    double phi = std::pow(kappa, 1.0 / (n - p - 1));
    out.scale_phi = phi;
    out.final_body = ConvexBody::polytope(Eq.scaled(phi));
    mscale = std::pow(phi, e_mass);
    cap_final = std::pow(phi, n - p);
  }
  out.residual = out.kkt_residual = out.tangent_residual = 0;
  double cg = 0, gg = 0;
  for (size_t i = 0; i < m; ++i) {
    cg += c[i] * mu[i];
    gg += mu[i] * mu[i];
  }
  for (size_t i = 0; i < m; ++i) {
    if (mu[i] <= 0) {
      out.inactive.push_back(int(i));
      continue;
    }
    double rec = mu[i] * mscale * (is_cotangent(p, n) ? kappa : 1.0);
    out.residual = std::max(out.residual, std::abs(rec - c[i]) / c[i]);
    out.kkt_residual = std::max(out.kkt_residual, std::abs(c[i] - kappa * mu[i]) / c[i]);
    out.tangent_residual = std::max(out.tangent_residual, std::abs(c[i] - cg / gg * mu[i]) / c[i]);
  }
  out.converged = converged;

  SurfaceMeasure rm = ef.measure;
  rm.total_mass = 0;
  for (auto& a : rm.atoms) {
    a.mass = mu[a.face] * mscale;
    rm.total_mass += a.mass;
  }
  rm.capacity = cap_final;
  rm.body = out.final_body.to_json();
  out.recovered_measure = rm;

  for (auto& v : Eq.vertices()) out.containment_radius = std::max(out.containment_radius, std::sqrt(dot(v.data(), v.data(), n)));
  out.containment_bound = out.admissibility.phi > 0 ? out.gamma_value / out.admissibility.phi : 1e300;

  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!cfg.trace_csv.empty()) write_trace(cfg.trace_csv, out.trace);
  if (!converged && !cfg.return_unconverged)
    fail(ErrorCode::NonConvergence, "Minkowski iteration stopped with KKT residual " + std::to_string(out.trace.back().kkt_residual));
  return out;
}

nlohmann::json UniquenessReport::to_json() const {
  nlohmann::json r = nlohmann::json::array();
  for (auto& s : runs)
    r.push_back({{"heights", s.heights},
                 {"gamma", s.gamma_value},
                 {"kkt_residual", s.kkt_residual},
                 {"converged", s.converged},
                 {"iterations", s.iterations}});
  return {{"runs", r},
          {"hausdorff", hausdorff},
          {"hausdorff_cells", hausdorff_cells},
          {"t", t},
          {"m", m},
          {"m_error", m_error},
          {"concavity_defect", concavity_defect},
          {"defect_bar", defect_bar}};
}

UniquenessReport uniqueness_probe(const MinkowskiInstance& inst, int runs, const std::vector<std::uint64_t>& seeds,
                                  const MinkowskiConfig& cfg, double perturbation) {
  if (runs < 2) fail(ErrorCode::Domain, "uniqueness probe needs at least two runs");
  UniquenessReport rep;
  for (int k = 0; k < runs; ++k) {
    MinkowskiConfig c = cfg;
    c.return_unconverged = true;
    c.trace_csv.clear();
    c.seed = k < int(seeds.size()) ? seeds[k] : cfg.seed + k;
    // the first run starts from the symmetric ball heights
    c.initial_perturbation = k == 0 ? 0.0 : perturbation;
    rep.runs.push_back(solve_minkowski(inst, c));
  }
  const int n = inst.dim();
  auto grid = direction_grid(n, 1280);
  std::vector<ConvexBody> bodies;
  for (auto& r : rep.runs) bodies.push_back(ConvexBody::polytope(r.working_body));
  for (int a = 0; a < runs; ++a)
    for (int b = a + 1; b < runs; ++b) {
      double d = hausdorff_distance(bodies[a], bodies[b], grid).distance;
      rep.hausdorff.push_back(d);
      rep.hausdorff_cells.push_back(d / cfg.solver.h);
    }
  auto F = std::make_shared<const FundamentalSolution>(dual_support(inst.structure));
  ConcavityReport cr = concavity_probe(F, bodies[0], bodies[1], {0, 0.25, 0.5, 0.75, 1}, cfg.solver);
  rep.t = cr.t;
  rep.m = cr.m;
  rep.m_error = cr.m_error;
  rep.concavity_defect = cr.defect;
  rep.defect_bar = cr.defect_bar;
  return rep;
}

nlohmann::json FaceGradientCheck::to_json() const {
  return {{"face", face}, {"predicted", predicted}, {"deltas", deltas}, {"differences", differences}};
}

FaceGradientCheck face_gradient_check(std::shared_ptr<const FundamentalSolution> F, const Polytope& P, int face,
                                      const std::vector<double>& deltas, const SolverConfig& cfg) {
  if (face < 0 || face >= P.size() || !P.face_of(face)) fail(ErrorCode::Domain, "face has no area");
  double dmax = 0;
  for (double d : deltas) {
    if (!(d > 0)) fail(ErrorCode::Domain, "deltas must be positive");
    dmax = std::max(dmax, d);
  }
  auto bumped = [&](double d) {
    std::vector<double> q = P.heights();
    q[face] += d;
    return Polytope(P.normals(), q);
  };
  SolverConfig c = cfg;
  if (!c.frame)
    c.frame = merge_frames({make_frame(Shape::realize(ConvexBody::polytope(P)), cfg.r_out_factor, cfg.core_margin),
                            make_frame(Shape::realize(ConvexBody::polytope(bumped(dmax))), cfg.r_out_factor,
                                       cfg.core_margin)});
  FaceGradientCheck r;
  r.face = face;
  auto base = solve_capacitary(F, ConvexBody::polytope(P), c);
  SurfaceMeasure mu = face_measure(base, P);
  for (auto& a : mu.atoms)
    if (a.face == face) r.predicted = (F->structure().p() - 1) * a.mass;
  for (double d : deltas) {
    auto s = solve_capacitary(F, ConvexBody::polytope(bumped(d)), c, &base);
    r.deltas.push_back(d);
    r.differences.push_back((s.capacity_energy - base.capacity_energy) / d);
  }
  return r;
}

}  // namespace capmink
