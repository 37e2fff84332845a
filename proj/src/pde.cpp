#include "capmink/pde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "capmink/error.hpp"
#include "capmink/sphere.hpp"

namespace capmink {

namespace {

constexpr double kSnap = 0.02;

double dot(const double* a, const double* b, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Discrete energy, its gradient and Hessian on one grid level.
class Problem {
 public:
  Problem(const Discretization& D, const Structure& s) : D_(D), s_(s), n_(D.grid().n), S_(D.stencil_size()) {
    N_ = D.grid().size();
    diag_ = D.slot(0, 0, 0);
    for (int p = 0; p < D.perms(); ++p) {
      const std::uint8_t* pr = D.perm(p);
      int pos[4][3] = {};
      for (int a = 0; a < n_; ++a) {
        for (int d = 0; d < 3; ++d) pos[a + 1][d] = pos[a][d];
        pos[a + 1][pr[a]] += 1;
      }
      for (int a = 0; a <= n_; ++a)
        for (int b = 0; b <= n_; ++b)
          slot_[p][a][b] = D.slot(pos[b][0] - pos[a][0], pos[b][1] - pos[a][1], pos[b][2] - pos[a][2]);
    }
  }

  size_t size() const { return N_; }
  int stencil() const { return S_; }
  const Discretization& disc() const { return D_; }

  double energy(const std::vector<double>& u, double eps) const {
    double J = 0;
    D_.for_each_tet(u, [&](const TetView& v) { J += v.weight * s_.eval_reg(v.grad, eps, nullptr, nullptr); });
    return J;
  }

  // Sum of weight * <A(grad u), grad u> with the exact structure.
  double flux_energy(const std::vector<double>& u, double t = -1) const {
    double E = 0;
    const int n = n_;
    D_.for_each_tet(u, [&](const TetView& v) {
      if (dot(v.grad, v.grad, n) == 0) return;
      double w = v.weight;
      if (t > 0) {
        double phi[4];
        for (int a = 0; a <= n; ++a) phi[a] = t - v.vals[a];
        double fr = positive_fraction(n, phi);
        if (fr == 0) return;
        w = v.tet->vol * std::min(v.cut ? v.cut->frac : 1.0, fr);
      }
      double g[3];
      s_.grad(v.grad, g);
      E += w * dot(g, v.grad, n);
    });
    return E;
  }

  // Energy; r = gradient on free nodes; A = stencil Hessian (or the frozen
  // coefficient operator when picard is set); cap = sum weight <A_eps, grad u>.
  double assemble(const std::vector<double>& u, double eps, std::vector<double>& r, std::vector<double>* A,
                  bool picard, double& cap) const {
    std::fill(r.begin(), r.end(), 0.0);
    if (A) std::fill(A->begin(), A->end(), 0.0);
    const auto& st = D_.status();
    const int n = n_, S = S_;
    double J = 0;
    cap = 0;
    D_.for_each_tet(u, [&](const TetView& v) {
      double g[3], H[9];
      const double w = v.weight;
      J += w * s_.eval_reg(v.grad, eps, g, A && !picard ? H : nullptr);
      cap += w * dot(g, v.grad, n);
      if (A && picard) {
        double en = std::sqrt(dot(v.grad, v.grad, n) + eps * eps);
        double c = en > 0 ? std::sqrt(dot(g, g, n)) / en : 0;
        for (int i = 0; i < n * n; ++i) H[i] = 0;
        for (int i = 0; i < n; ++i) H[i * n + i] = c;
      }
      const Tet& t = *v.tet;
      if (!v.cut) {
        double q[3];
        for (int a = 0; a < n; ++a) q[a] = g[t.perm[a]] / t.d[t.perm[a]];
        for (int a = 0; a <= n; ++a) {
          if (st[t.node[a]] != kFree) continue;
          r[t.node[a]] += w * ((a > 0 ? q[a - 1] : 0) - (a < n ? q[a] : 0));
        }
        if (!A) return;
        double Hs[3][3], B[3][4], K[4][4];
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            Hs[a][b] = H[t.perm[a] * n + t.perm[b]] / (t.d[t.perm[a]] * t.d[t.perm[b]]);
        for (int a = 0; a < n; ++a)
          for (int c = 0; c <= n; ++c) B[a][c] = (c > 0 ? Hs[a][c - 1] : 0) - (c < n ? Hs[a][c] : 0);
        for (int a = 0; a <= n; ++a)
          for (int c = 0; c <= n; ++c) K[a][c] = (a > 0 ? B[a - 1][c] : 0) - (a < n ? B[a][c] : 0);
        auto& M = *A;
        for (int a = 0; a <= n; ++a) {
          if (st[t.node[a]] != kFree) continue;
          double* row = &M[t.node[a] * S];
          for (int c = 0; c <= n; ++c) row[slot_[t.pidx][a][c]] += w * K[a][c];
        }
      } else {
        const CutTet& c = *v.cut;
        double HG[4][3];
        for (int e = 0; e < c.next; ++e) {
          r[t.node[c.ext[e]]] += w * dot(g, c.G[e], n);
          if (!A) continue;
          for (int d = 0; d < n; ++d) HG[e][d] = dot(&H[d * n], c.G[e], n);
        }
        if (!A) return;
        auto& M = *A;
        for (int e = 0; e < c.next; ++e) {
          double* row = &M[t.node[c.ext[e]] * S];
          for (int f = 0; f < c.next; ++f) row[slot_[t.pidx][c.ext[e]][c.ext[f]]] += w * dot(c.G[e], HG[f], n);
        }
      }
    });
    return J;
  }

  void apply(const std::vector<double>& A, const std::vector<double>& x, std::vector<double>& y) const {
    const int S = S_;
    long off[15];
    for (int s = 0; s < S; ++s) off[s] = D_.offset(s);
    for (size_t i : D_.free_nodes()) {
      const double* row = &A[i * S];
      double v = 0;
      for (int s = 0; s < S; ++s) v += row[s] * x[long(i) + off[s]];
      y[i] = v;
    }
  }

  // Jacobi-preconditioned CG on the free nodes; x starts at zero.
  long pcg(const std::vector<double>& A, const std::vector<double>& b, std::vector<double>& x, double rtol,
           int maxit) const {
    const auto& fr = D_.free_nodes();
    std::fill(x.begin(), x.end(), 0.0);
    std::vector<double> r(N_, 0.0), z(N_, 0.0), p(N_, 0.0), q(N_, 0.0), dinv(N_, 0.0);
    double bn = 0;
    for (size_t i : fr) {
      double d = A[i * S_ + diag_];
      dinv[i] = d > 0 ? 1 / d : 1;
      r[i] = b[i];
      bn += b[i] * b[i];
    }
    bn = std::sqrt(bn);
    if (bn == 0) return 0;
    double rz = 0;
    for (size_t i : fr) {
      z[i] = dinv[i] * r[i];
      p[i] = z[i];
      rz += r[i] * z[i];
    }
    long it = 0;
    while (it < maxit) {
      ++it;
      apply(A, p, q);
      double pq = 0;
      for (size_t i : fr) pq += p[i] * q[i];
      if (!(pq > 0)) break;
      double alpha = rz / pq, rr = 0;
      for (size_t i : fr) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
        rr += r[i] * r[i];
      }
      if (std::sqrt(rr) <= rtol * bn) break;
      double rz2 = 0;
      for (size_t i : fr) {
        z[i] = dinv[i] * r[i];
        rz2 += r[i] * z[i];
      }
      double beta = rz2 / rz;
      rz = rz2;
      for (size_t i : fr) p[i] = z[i] + beta * p[i];
    }
    return it;
  }

 private:
  const Discretization& D_;
  const Structure& s_;
  int n_, S_, diag_;
  size_t N_;
  int slot_[6][4][4];
};

struct NewtonResult {
  int iters = 0;
  long cg = 0;
  double rel = 0;
  bool ok = false;
};

NewtonResult newton(const Problem& P, std::vector<double>& u, double eps, double tol, const SolverConfig& cfg,
                    bool linear) {
  const size_t N = P.size();
  const auto& fr = P.disc().free_nodes();
  std::vector<double> r(N), A(N * P.stencil()), delta(N), b(N), trial;
  NewtonResult out;
  bool picard = false;
  int fails = 0;
  for (int it = 0;; ++it) {
    double cap;
    double J = P.assemble(u, eps, r, &A, picard, cap);
    double res = 0;
    for (size_t i : fr) res += std::abs(r[i]);
    out.rel = res / std::max(cap, 1e-300);
    if (cfg.verbose)
      std::fprintf(stderr, "    newton eps=%.0e it=%d J=%.12g rel=%.3e%s\n", eps, it, J, out.rel,
                   picard ? " (picard)" : "");
    if (out.rel <= tol) {
      out.ok = true;
      break;
    }
    if (it >= cfg.max_newton_iters) break;
    ++out.iters;
    double forcing = linear ? 0.1 * tol / out.rel : std::max(0.1 * tol / out.rel, std::min(0.1, out.rel));
    forcing = std::clamp(forcing, 1e-14, 0.1);
    for (size_t i : fr) b[i] = -r[i];
    out.cg += P.pcg(A, b, delta, forcing, cfg.max_cg_iters);
    double slope = 0;
    for (size_t i : fr) slope += r[i] * delta[i];
    if (!(slope < 0)) {
      if (picard) break;
      picard = true;
      continue;
    }
    if (linear) {
      for (size_t i : fr) u[i] += delta[i];
      continue;
    }
    trial = u;
    double alpha = 1;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      for (size_t i : fr) trial[i] = u[i] + alpha * delta[i];
      double Jt = P.energy(trial, eps);
      if (Jt <= J + 1e-4 * alpha * slope + 1e-13 * std::abs(J)) {
        accepted = true;
        break;
      }
    }
    if (accepted) {
      u.swap(trial);
      fails = 0;
    } else if (++fails >= 5) {
      if (picard) break;
      picard = true;
      fails = 0;
    }
  }
  return out;
}

NewtonResult continuation(const Problem& P, std::vector<double>& u, const std::vector<double>& eps_list,
                          const SolverConfig& cfg, bool linear) {
  NewtonResult total;
  for (size_t k = 0; k < eps_list.size(); ++k) {
    bool last = k + 1 == eps_list.size();
    double tol = last ? cfg.tolerance : std::max(cfg.tolerance, 1e-3);
    NewtonResult r = newton(P, u, eps_list[k], tol, cfg, linear);
    total.iters += r.iters;
    total.cg += r.cg;
    total.rel = r.rel;
    total.ok = r.ok;
  }
  return total;
}

// Far-field energy outside the box per unit tau^p:
// the surface integral of G <A(grad G), -nu> over the box faces.
double box_tail(const FundamentalSolution& F, const GridFrame& fr) {
  const Structure& s = F.structure();
  const int n = fr.n, m = 32;
  std::vector<double> gx, gw;
  gauss_legendre(m, gx, gw);
  const double R = fr.R_out;
  double total = 0;
  double x[3], g[3], a[3];
  for (int d = 0; d < n; ++d)
    for (int sgn = -1; sgn <= 1; sgn += 2) {
      int o1 = (d + 1) % n, o2 = (d + 2) % n;
      int m2 = n == 3 ? m : 1;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m2; ++j) {
          x[d] = sgn * R;
          x[o1] = R * gx[i];
          double w = R * gw[i];
          if (n == 3) {
            x[o2] = R * gx[j];
            w *= R * gw[j];
          }
          double G = F.G(x, g);
          s.grad(g, a);
          total += w * G * (-sgn * a[d]);
        }
    }
  return total;
}

struct LevelRun {
  double energy = 0, flux = 0, rel = 0, tail = 0, eps = 0;
  int newton = 0;
  long cg = 0;
  std::vector<RoundInfo> rounds;
};

double flux_capacity(const Problem& P, const std::vector<double>& u, double t, double tail_energy) {
  if (!(t > 0 && t < 1)) fail(ErrorCode::Domain, "level must lie in (0,1)");
  double umax = 0;
  for (size_t o : P.disc().outer_nodes()) umax = std::max(umax, u[o]);
  if (umax >= t) fail(ErrorCode::LevelOutsideGrid, "level set reaches the outer box");
  return (P.flux_energy(u, t) + tail_energy) / t;
}

LevelRun run_level(const Problem& P, const FundamentalSolution& F, std::vector<double>& u, double& tau,
                   const std::vector<double>& eps_list, const SolverConfig& cfg) {
  const Discretization& D = P.disc();
  const Grid& g = D.grid();
  const int n = g.n;
  const double p = F.structure().p();
  const bool linear = F.structure().linear();
  const auto& outer = D.outer_nodes();
  std::vector<double> Gout(outer.size());
  double x[3];
  for (size_t k = 0; k < outer.size(); ++k) {
    g.coords(outer[k], x);
    for (int d = 0; d < n; ++d) x[d] -= g.frame.center[d];
    Gout[k] = F.G(x);
  }
  LevelRun out;
  out.tail = box_tail(F, g.frame);
  std::vector<double> eps = linear ? std::vector<double>{eps_list.back()} : eps_list;
  out.eps = eps.back();
  double prev = 0;
  const int rounds = std::max(1, cfg.matching_rounds);
  for (int rd = 0; rd < rounds; ++rd) {
    for (size_t k = 0; k < outer.size(); ++k) u[outer[k]] = tau * Gout[k];
    NewtonResult nr = continuation(P, u, eps, cfg, linear);
    out.newton += nr.iters;
    out.cg += nr.cg;
    out.rel = nr.rel;
    if (!nr.ok)
      fail(ErrorCode::NonConvergence, "nonlinear residual stagnated at " + std::to_string(nr.rel));
    double cap = P.flux_energy(u) + std::pow(tau, p) * out.tail;
    RoundInfo ri;
    ri.tau = tau;
    ri.capacity = cap;
    ri.drift = prev > 0 ? std::abs(cap - prev) / cap : 1.0;
    ri.newton_iters = nr.iters;
    ri.cg_iters = nr.cg;
    out.rounds.push_back(ri);
    if (cfg.verbose)
      std::fprintf(stderr, "  level h=%g round %d tau=%.6g cap=%.8g newton=%d cg=%ld\n", g.h, rd, tau, cap,
                   nr.iters, nr.cg);
    out.energy = cap;
    prev = cap;
    if (rd + 1 < rounds) tau = std::pow(cap, 1 / (p - 1));
  }
  out.flux = flux_capacity(P, u, 0.5, std::pow(tau, p) * out.tail);
  return out;
}

int pick_levels(const SolverConfig& cfg, const GridFrame& frame, double r_in) {
  int want = cfg.coarse_levels >= 0 ? cfg.coarse_levels : 3;
  int L = 0;
  for (int l = 1; l <= want; ++l) {
    double hl = cfg.h * std::ldexp(1.0, l);
    if (2 * r_in / hl < std::max(cfg.min_nodes_across, 2)) break;
    try {
      build_grid(frame, hl, cfg.stretch);
    } catch (const Error&) {
      break;
    }
    L = l;
  }
  return L;
}

}  // namespace

nlohmann::json SolverConfig::to_json() const {
  nlohmann::json j = {{"h", h},
                      {"r_out_factor", r_out_factor},
                      {"tolerance", tolerance},
                      {"eps_schedule", eps_schedule},
                      {"matching_rounds", matching_rounds},
                      {"max_newton_iters", max_newton_iters},
                      {"min_nodes_across", min_nodes_across},
                      {"stretch", stretch},
                      {"core_margin", core_margin},
                      {"coarse_levels", coarse_levels},
                      {"max_cg_iters", max_cg_iters},
                      {"verbose", verbose}};
  if (frame) j["frame"] = frame->to_json();
  return j;
}

SolverConfig SolverConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::Schema, "solver config must be an object");
  SolverConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const auto& v = it.value();
      if (k == "h") c.h = v.get<double>();
      else if (k == "r_out_factor") c.r_out_factor = v.get<double>();
      else if (k == "tolerance") c.tolerance = v.get<double>();
      else if (k == "eps_schedule") c.eps_schedule = v.get<std::vector<double>>();
      else if (k == "matching_rounds") c.matching_rounds = v.get<int>();
      else if (k == "max_newton_iters") c.max_newton_iters = v.get<int>();
      else if (k == "min_nodes_across") c.min_nodes_across = v.get<int>();
      else if (k == "stretch") c.stretch = v.get<double>();
      else if (k == "core_margin") c.core_margin = v.get<double>();
      else if (k == "coarse_levels") c.coarse_levels = v.get<int>();
      else if (k == "max_cg_iters") c.max_cg_iters = v.get<int>();
      else if (k == "verbose") c.verbose = v.get<bool>();
      else if (k == "frame") c.frame = GridFrame::from_json(v);
      else fail(ErrorCode::Schema, "unknown solver config key: " + k);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Schema, std::string("solver config: ") + e.what());
  }
  if (!(c.h > 0) || !(c.r_out_factor > 1) || !(c.tolerance > 0) || c.eps_schedule.empty() ||
      c.matching_rounds < 1 || c.max_newton_iters < 1 || !(c.stretch >= 1))
    fail(ErrorCode::Schema, "solver config values out of range");
  for (double e : c.eps_schedule)
    if (!(e >= 0)) fail(ErrorCode::Schema, "eps_schedule entries must be nonnegative");
  return c;
}

std::optional<double> CapacitarySolution::coarse_capacity() const {
  if (levels.size() < 2) return std::nullopt;
  const auto& c = levels[levels.size() - 2];
  if (std::abs(c.h - 2 * levels.back().h) > 1e-9 * c.h) return std::nullopt;
  return c.energy;
}

double CapacitarySolution::error_bar() const {
  double e = std::abs(capacity_energy - capacity_flux);
  if (auto c = coarse_capacity()) e += std::abs(capacity_energy - *c);
  return e;
}

nlohmann::json CapacitarySolution::to_json() const {
  const Grid& g = grid();
  nlohmann::json rj = nlohmann::json::array();
  for (auto& r : rounds)
    rj.push_back({{"tau", r.tau},
                  {"capacity", r.capacity},
                  {"drift", r.drift},
                  {"newton_iters", r.newton_iters},
                  {"cg_iters", r.cg_iters}});
  nlohmann::json lj = nlohmann::json::array();
  for (auto& l : levels) lj.push_back({{"h", l.h}, {"energy", l.energy}, {"flux", l.flux}});
  return {{"capacity_energy", capacity_energy},
          {"capacity_flux", capacity_flux},
          {"discrepancy", discrepancy},
          {"error_bar", error_bar()},
          {"residual_norm", residual_norm},
          {"regularization_eps", regularization_eps},
          {"tau", tau},
          {"tail_energy", std::pow(tau, structure->p()) * tail_unit},
          {"rounds", rj},
          {"levels", lj},
          {"newton_iters", newton_iters},
          {"cg_iters", cg_iters},
          {"seconds", seconds},
          {"grid",
           {{"n", g.n},
            {"dims", std::vector<int>(g.N.begin(), g.N.begin() + g.n)},
            {"h", g.h},
            {"stretch", g.stretch},
            {"frame", g.frame.to_json()}}},
          {"structure", structure->to_json()},
          {"body", body.to_json()}};
}

double ball_capacity(int n, double p, double R) {
  return sphere_area(n) * std::pow((n - p) / (p - 1), p - 1) * std::pow(R, n - p);
}

CapacitarySolution solve_capacitary(StructurePtr s, const ConvexBody& E, const SolverConfig& cfg,
                                    const CapacitarySolution* warm) {
  if (!s) fail(ErrorCode::Domain, "null structure");
  std::shared_ptr<const FundamentalSolution> F;
  if (warm && warm->fundamental && warm->structure == s)
    F = warm->fundamental;
  else
    F = std::make_shared<FundamentalSolution>(dual_support(s));
  return solve_capacitary(F, E, cfg, warm);
}

CapacitarySolution solve_capacitary(std::shared_ptr<const FundamentalSolution> F, const ConvexBody& E,
                                    const SolverConfig& cfg, const CapacitarySolution* warm) {
  auto t0 = std::chrono::steady_clock::now();
  const Structure& s = F->structure();
  const int n = s.dim();
  const double p = s.p();
  if (n < 2 || n > 3) fail(ErrorCode::Domain, "grid solver supports n in {2,3}");
  if (E.dim() != n) fail(ErrorCode::Domain, "body and structure dimensions differ");
  if (!(cfg.h > 0)) fail(ErrorCode::Domain, "grid spacing must be positive");
  Shape shape = Shape::realize(E);
  Radii rad = shape.radii();
  if (!(rad.r_in > 1e-12)) fail(ErrorCode::DegenerateBody, "body has empty interior");
  if (2 * rad.r_in / cfg.h < cfg.min_nodes_across)
    fail(ErrorCode::GridTooCoarse, "fewer than min_nodes_across grid nodes across the body");
  GridFrame frame = cfg.frame ? *cfg.frame : make_frame(shape, cfg.r_out_factor, cfg.core_margin);
  if (frame.n != n) fail(ErrorCode::Domain, "frame dimension differs from the body");
  for (int d = 0; d < n; ++d) {
    double lo[3], hi[3];
    shape.bounding_box(lo, hi);
    if (lo[d] < frame.core_lo[d] || hi[d] > frame.core_hi[d])
      fail(ErrorCode::Domain, "body does not fit the fixed grid frame");
  }

  const bool warm_ok = warm && warm->disc && warm->grid().n == n;
  int L = warm_ok ? 0 : pick_levels(cfg, frame, rad.r_in);

  double tau;
  if (warm_ok)
    tau = warm->tau;
  else
    tau = std::pow(ball_capacity(n, p, std::sqrt(rad.r_in * frame.r_out)), 1 / (p - 1));

  CapacitarySolution sol;
  sol.structure = F->structure_ptr();
  sol.fundamental = F;
  sol.body = E;
  std::vector<double> u;
  std::shared_ptr<const Discretization> prevD;
  for (int l = L; l >= 0; --l) {
    double hl = cfg.h * std::ldexp(1.0, l);
    Grid g = build_grid(frame, hl, cfg.stretch);
    auto D = std::make_shared<const Discretization>(g, shape, kSnap);
    if (prevD) {
      u = transfer(prevD->grid(), u, D->grid());
    } else if (warm_ok) {
      u = transfer(warm->grid(), warm->u, D->grid());
    } else {
      u.assign(g.size(), 0.0);
      double x[3];
      for (size_t i = 0; i < g.size(); ++i) {
        g.coords(i, x);
        double r2 = 0;
        for (int d = 0; d < n; ++d) {
          x[d] -= frame.center[d];
          r2 += x[d] * x[d];
        }
        u[i] = r2 > 1e-24 ? std::min(1.0, tau * F->G(x)) : 1.0;
      }
    }
    const auto& st = D->status();
    for (size_t i = 0; i < u.size(); ++i) {
      if (st[i] == kBody) u[i] = 1;
      else u[i] = std::clamp(u[i], 0.0, 1.0);
    }
    Problem P(*D, s);
    bool full = !prevD && !warm_ok;
    std::vector<double> eps = full ? cfg.eps_schedule : std::vector<double>{cfg.eps_schedule.back()};
    LevelRun run;
    try {
      std::vector<double> u0 = u;
      double tau0 = tau;
      try {
        run = run_level(P, *F, u, tau, eps, cfg);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonConvergence || full) throw;
        u = u0;
        tau = tau0;
        run = run_level(P, *F, u, tau, cfg.eps_schedule, cfg);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonConvergence && l > 0) {
        // a failed coarse level only costs the warm start
        prevD.reset();
        continue;
      }
      throw;
    }
    sol.levels.push_back({hl, run.energy, run.flux});
    sol.newton_iters += run.newton;
    sol.cg_iters += run.cg;
    if (l == 0) {
      sol.capacity_energy = run.energy;
      sol.capacity_flux = run.flux;
      sol.discrepancy = std::abs(run.energy - run.flux) / run.energy;
      sol.residual_norm = run.rel;
      sol.regularization_eps = run.eps;
      sol.tail_unit = run.tail;
      sol.rounds = run.rounds;
      sol.tau = run.rounds.back().tau;
    }
    prevD = D;
  }
  sol.disc = prevD;
  sol.u = std::move(u);
  sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

double capacity_by_flux(const CapacitarySolution& sol, double t) {
  if (!sol.disc) fail(ErrorCode::Domain, "empty solution");
  Problem P(*sol.disc, *sol.structure);
  return flux_capacity(P, sol.u, t, std::pow(sol.tau, sol.structure->p()) * sol.tail_unit);
}

nlohmann::json ConvexityReport::to_json() const {
  nlohmann::json a = nlohmann::json::array();
  for (auto& l : levels)
    a.push_back({{"t", l.t},
                 {"superlevel_nodes", l.superlevel_nodes},
                 {"max_penetration", l.max_penetration},
                 {"max_penetration_cells", l.max_penetration_cells},
                 {"ok", l.ok}});
  return {{"levels", a}, {"ok", ok}};
}

ConvexityReport check_level_convexity(const CapacitarySolution& sol, const std::vector<double>& levels) {
  return check_level_convexity(sol, sol.u, levels);
}

ConvexityReport check_level_convexity(const CapacitarySolution& sol, const std::vector<double>& u,
                                      const std::vector<double>& levels) {
  const Grid& g = sol.grid();
  const int n = g.n;
  const size_t N = g.size();
  if (u.size() != N) fail(ErrorCode::Domain, "field size differs from the grid");
  auto dirs = direction_grid(n, 1280);
  ConvexityReport rep;
  rep.ok = true;
  std::vector<double> hs(dirs.size());
  for (double t : levels) {
    ConvexityLevel L;
    L.t = t;
    std::fill(hs.begin(), hs.end(), -1e300);
    double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
    double x[3] = {0, 0, 0};
    for (size_t i = 0; i < N; ++i) {
      if (!(u[i] > t)) continue;
      ++L.superlevel_nodes;
      g.coords(i, x);
      for (int d = 0; d < n; ++d) {
        lo[d] = std::min(lo[d], x[d]);
        hi[d] = std::max(hi[d], x[d]);
      }
    }
    if (L.superlevel_nodes > 0) {
      // only nodes on the boundary of the set matter for the hull
      int c[3];
      for (size_t i = 0; i < N; ++i) {
        if (!(u[i] > t)) continue;
        g.ijk(i, c);
        bool interior = true;
        for (int d = 0; d < n && interior; ++d)
          for (int s = -1; s <= 1; s += 2) {
            int cc[3] = {c[0], c[1], c[2]};
            cc[d] += s;
            if (cc[d] < 0 || cc[d] >= g.N[d] || !(u[g.id(cc[0], cc[1], cc[2])] > t)) {
              interior = false;
              break;
            }
          }
        if (interior) continue;
        g.coords(i, x);
        for (size_t k = 0; k < dirs.size(); ++k) hs[k] = std::max(hs[k], dot(x, dirs[k].v, n));
      }
      for (size_t i = 0; i < N; ++i) {
        if (u[i] > t) continue;
        g.coords(i, x);
        bool inbox = true;
        for (int d = 0; d < n; ++d) inbox = inbox && x[d] >= lo[d] && x[d] <= hi[d];
        if (!inbox) continue;
        double depth = 1e300;
        for (size_t k = 0; k < dirs.size() && depth > 0; ++k) depth = std::min(depth, hs[k] - dot(x, dirs[k].v, n));
        if (depth <= 0) continue;
        L.max_penetration = std::max(L.max_penetration, depth);
        L.max_penetration_cells = std::max(L.max_penetration_cells, depth / g.local_spacing(i));
      }
    }
    L.ok = L.max_penetration_cells <= 1.0;
    rep.ok = rep.ok && L.ok;
    rep.levels.push_back(L);
  }
  return rep;
}

nlohmann::json RadialReport::to_json() const {
  return {{"min_ratio", min_ratio},
          {"samples", samples},
          {"shell", {shell_lo, shell_hi}},
          {"grad_exponent", grad_exponent},
          {"value_exponent", value_exponent},
          {"decay_c", {decay_c_min, decay_c_max}},
          {"shell_valid", shell_valid}};
}

namespace {

// Nodal gradient by central differences on the tensor grid.
void nodal_gradient(const Grid& g, const std::vector<double>& u, int d, std::vector<double>& out) {
  out.assign(g.size(), 0.0);
  int c[3];
  for (size_t i = 0; i < g.size(); ++i) {
    g.ijk(i, c);
    int a = std::max(c[d] - 1, 0), b = std::min(c[d] + 1, g.N[d] - 1);
    int ca[3] = {c[0], c[1], c[2]}, cb[3] = {c[0], c[1], c[2]};
    ca[d] = a;
    cb[d] = b;
    out[i] = (u[g.id(cb[0], cb[1], cb[2])] - u[g.id(ca[0], ca[1], ca[2])]) / (g.x[d][b] - g.x[d][a]);
  }
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

RadialReport check_radial_monotonicity(const CapacitarySolution& sol, const Point& center) {
  const Grid& g = sol.grid();
  const int n = g.n;
  const double p = sol.structure->p();
  if (int(center.size()) != n) fail(ErrorCode::Domain, "center dimension differs");
  std::vector<double> gr[3];
  for (int d = 0; d < n; ++d) nodal_gradient(g, sol.u, d, gr[d]);
  const auto& st = sol.disc->status();
  RadialReport rep;
  rep.min_ratio = 1e300;
  int c[3];
  double x[3] = {0, 0, 0};
  for (size_t i = 0; i < g.size(); ++i) {
    if (st[i] != kFree || sol.u[i] <= 0) continue;
    g.ijk(i, c);
    bool near_body = false;
    for (int d = 0; d < n && !near_body; ++d)
      for (int s = -1; s <= 1; s += 2) {
        int cc[3] = {c[0], c[1], c[2]};
        cc[d] += s;
        if (st[g.id(cc[0], cc[1], cc[2])] == kBody) near_body = true;
      }
    if (near_body) continue;
    g.coords(i, x);
    double r = 0, gd = 0;
    for (int d = 0; d < n; ++d) r += (center[d] - x[d]) * (center[d] - x[d]);
    r = std::sqrt(r);
    for (int d = 0; d < n; ++d) gd += gr[d][i] * (center[d] - x[d]) / r;
    rep.min_ratio = std::min(rep.min_ratio, gd * r / sol.u[i]);
    ++rep.samples;
  }
  const GridFrame& f = g.frame;
  rep.shell_lo = 3 * f.r_out;
  rep.shell_hi = f.R_out / 2;
  rep.shell_valid = rep.shell_lo < rep.shell_hi;
  double lo = rep.shell_lo, hi = rep.shell_valid ? rep.shell_hi : 1.5 * rep.shell_lo;
  auto rays = n == 3 ? fibonacci_sphere(96) : circle_grid(64);
  const int K = 12;
  double gsum = 0, vsum = 0;
  rep.decay_c_min = 1e300;
  rep.decay_c_max = 0;
  for (auto& dir : rays) {
    std::vector<double> lr, lu, lg;
    for (int k = 0; k < K; ++k) {
      double r = lo * std::pow(hi / lo, double(k) / (K - 1));
      for (int d = 0; d < n; ++d) x[d] = center[d] + r * dir[d];
      double uv = g.interpolate(sol.u, x);
      double gn = 0;
      for (int d = 0; d < n; ++d) {
        double gv = g.interpolate(gr[d], x);
        gn += gv * gv;
      }
      lr.push_back(std::log(r));
      lu.push_back(std::log(uv));
      lg.push_back(0.5 * std::log(gn));
      double cst = std::pow(uv, p - 1) / (sol.capacity_energy * std::pow(r, p - n));
      rep.decay_c_min = std::min(rep.decay_c_min, cst);
      rep.decay_c_max = std::max(rep.decay_c_max, cst);
    }
    vsum += slope(lr, lu);
    gsum += slope(lr, lg);
  }
  rep.value_exponent = vsum / rays.size();
  rep.grad_exponent = gsum / rays.size();
  return rep;
}

void export_solution(const CapacitarySolution& sol, const std::string& prefix) {
  const Grid& g = sol.grid();
  std::ofstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) fail(ErrorCode::Domain, "cannot write " + prefix + ".bin");
  bin.write(reinterpret_cast<const char*>(sol.u.data()), std::streamsize(sol.u.size() * sizeof(double)));
  nlohmann::json axes = nlohmann::json::array();
  std::vector<double> origin;
  for (int d = 0; d < g.n; ++d) {
    axes.push_back(g.x[d]);
    origin.push_back(g.x[d].front());
  }
  nlohmann::json hdr = {{"dims", std::vector<int>(g.N.begin(), g.N.begin() + g.n)},
                        {"spacing", g.h},
                        {"origin", origin},
                        {"axes", axes},
                        {"dtype", "float64"},
                        {"order", "x-fastest"},
                        {"solution", sol.to_json()}};
  std::ofstream js(prefix + ".json");
  if (!js) fail(ErrorCode::Domain, "cannot write " + prefix + ".json");
  js << hdr.dump(2) << "\n";
}

void export_slice_csv(const CapacitarySolution& sol, const std::string& path) {
  const Grid& g = sol.grid();
  std::ofstream os(path);
  if (!os) fail(ErrorCode::Domain, "cannot write " + path);
  int k = 0;
  if (g.n == 3) {
    const auto& z = g.x[2];
    double c = g.frame.center[2];
    k = int(std::min_element(z.begin(), z.end(), [&](double a, double b) { return std::abs(a - c) < std::abs(b - c); }) -
            z.begin());
  }
  os << "x,y,u\n";
  char buf[96];
  for (int j = 0; j < g.N[1]; ++j)
    for (int i = 0; i < g.N[0]; ++i) {
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.12g\n", g.x[0][i], g.x[1][j], sol.u[g.id(i, j, k)]);
      os << buf;
    }
}

}  // namespace capmink
