// Acceptance run: one PASS/FAIL line per criterion; exits nonzero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "capmink/bm_verify.hpp"
#include "capmink/error.hpp"
#include "capmink/measure.hpp"
#include "capmink/minkowski.hpp"
#include "capmink/sphere.hpp"

using namespace capmink;

namespace {

constexpr double kPi = std::numbers::pi;
const std::vector<Point> kAxes = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

ConvexBody box(double a, double b, double c) {
  return ConvexBody::polytope(Polytope(kAxes, {a, a, b, b, c, c}));
}
ConvexBody cube(double a) { return box(a, a, a); }
ConvexBody ball(double r) { return ConvexBody::ball({0, 0, 0}, r); }

std::shared_ptr<const FundamentalSolution> iso(double p) {
  return std::make_shared<const FundamentalSolution>(dual_support(make_isotropic(3, p)));
}

double radial_capacity(double p, double R) { return 4 * kPi * std::pow((3 - p) / (p - 1), p - 1) * std::pow(R, 3 - p); }

SolverConfig base() {
  SolverConfig c;
  c.h = 1.0 / 8;
  c.r_out_factor = 8;
  return c;
}

int failures = 0;

void report(int id, const std::string& name, const std::function<bool(std::string&)>& run) {
  auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = run(detail);
  } catch (const std::exception& e) {
    detail += std::string(" exception: ") + e.what();
  }
  double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!ok) ++failures;
  std::printf("criterion %2d %s  %s  [%s] (%.0f s)\n", id, ok ? "PASS" : "FAIL", name.c_str(), detail.c_str(), s);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

}  // namespace

int main() {
  auto F2 = iso(2), F15 = iso(1.5);
  std::optional<CapacitarySolution> cube2, cube15;

  report(1, "ball capacity", [&](std::string& d) {
    auto t0 = std::chrono::steady_clock::now();
    auto a = solve_capacitary(F2, ball(1), base());
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto b = solve_capacitary(F15, ball(1), base());
    double ea = a.capacity_energy / (4 * kPi) - 1, eb = b.capacity_energy / radial_capacity(1.5, 1) - 1;
    d = fmt("p=2 rel %+.4f", ea) + fmt(" in %.1f s", secs) + fmt(", p=1.5 rel %+.4f", eb);
    return std::abs(ea) <= 0.03 && secs < 120 && std::abs(eb) <= 0.05;
  });

  report(2, "scaling law", [&](std::string& d) {
    bool ok = true;
    for (double p : {1.5, 2.0})
      for (int shape = 0; shape < 2; ++shape) {
        auto F = p == 2 ? F2 : F15;
        auto E = shape ? cube(0.5) : ball(0.5);
        double r = solve_capacitary(F, E.scaled(2), base()).capacity_energy /
                   solve_capacitary(F, E, base()).capacity_energy / std::pow(2.0, 3 - p);
        d += std::string(shape ? " cube" : " ball") + fmt(" p=%.1f", p) + fmt(" %+.4f", r - 1);
        ok = ok && std::abs(r - 1) <= 0.03;
      }
    return ok;
  });

  report(3, "ball-radius exponent", [&](std::string& d) {
    bool ok = true;
    for (double p : {1.5, 2.0}) {
      std::vector<double> lr, lc;
      for (double R : {0.5, 1.0, 2.0}) {
        lr.push_back(std::log(R));
        lc.push_back(std::log(solve_capacitary(p == 2 ? F2 : F15, ball(R), base()).capacity_energy));
      }
      double mx = (lr[0] + lr[1] + lr[2]) / 3, my = (lc[0] + lc[1] + lc[2]) / 3, sxy = 0, sxx = 0;
      for (int k = 0; k < 3; ++k) {
        sxy += (lr[k] - mx) * (lc[k] - my);
        sxx += (lr[k] - mx) * (lr[k] - mx);
      }
      double slope = sxy / sxx;
      d += fmt(" p=%.1f", p) + fmt(" slope %.4f", slope);
      ok = ok && std::abs(slope - (3 - p)) <= 0.05;
    }
    return ok;
  });

  report(4, "Brunn-Minkowski", [&](std::string& d) {
    // unit-scale bodies at h = 1/12: the strict slack is a few percent and
    // needs bars below that
    SolverConfig c = base();
    c.h = 1.0 / 12;
    const std::vector<double> L = {0.25, 0.5, 0.75};
    auto cb = verify_bm(F2, cube(1), ball(1), L, c);
    auto ce = verify_bm(F2, cube(1), box(2, 0.5, 0.5), L, c);
    auto hb = verify_bm(F2, ball(1), ball(2), L, c);
    bool homo = true;
    double worst = -1e300;
    for (size_t k = 0; k < L.size(); ++k) {
      homo = homo && std::abs(hb.slack[k]) <= hb.error_bar[k];
      worst = std::max(worst, std::abs(hb.slack[k]) - hb.error_bar[k]);
    }
    auto best = [](const BMReport& r) {
      double b = -1e300;
      for (size_t k = 0; k < r.slack.size(); ++k) b = std::max(b, r.slack[k] - r.error_bar[k]);
      return b;
    };
    d = fmt("cube/ball min slack %.4g", cb.min_slack) + fmt(" max slack-bar %.3g", best(cb)) +
        fmt(", cube/box min slack %.4g", ce.min_slack) + fmt(" max slack-bar %.3g", best(ce)) +
        fmt(", homothetic balls max |slack|-bar %.3g", worst);
    return cb.nonnegative && cb.significant && ce.nonnegative && ce.significant && hb.nonnegative && homo;
  });

  report(5, "Hadamard formula", [&](std::string& d) {
    auto r = verify_hadamard(F2, cube(0.5), ball(0.5), 0.5, {0.2, 0.1, 0.05}, base());
    d = fmt("extrapolated %.5g", r.extrapolated) + fmt(" predicted %.5g", r.predicted) + fmt(" rel %.4f", r.rel_error);
    return r.rel_error <= 0.08;
  });

  report(6, "capacity-measure identity", [&](std::string& d) {
    bool ok = true;
    const Polytope C(kAxes, std::vector<double>(6, 1.0));
    for (double p : {1.5, 2.0}) {
      auto sol = solve_capacitary(p == 2 ? F2 : F15, ConvexBody::polytope(C), base());
      auto mu = face_measure(sol, C);
      double hint = 0;
      for (auto& a : mu.atoms) hint += C.heights()[a.face] * a.mass;
      double rel = (p - 1) / (3 - p) * hint / sol.capacity_energy - 1;
      d += fmt(" p=%.1f", p) + fmt(" rel %+.4f", rel);
      ok = ok && std::abs(rel) <= 0.07;
      (p == 2 ? cube2 : cube15) = std::move(sol);
    }
    return ok;
  });

  report(7, "level-set convexity", [&](std::string& d) {
    if (!cube2) cube2 = solve_capacitary(F2, cube(1), base());
    auto rep = check_level_convexity(*cube2, {0.2, 0.5, 0.8});
    bool ok = true;
    for (auto& l : rep.levels) {
      d += fmt(" t=%.1f", l.t) + fmt(" %.3f cells", l.max_penetration_cells);
      ok = ok && l.max_penetration_cells <= 1;
    }
    return ok;
  });

  report(8, "far-field decay", [&](std::string& d) {
    bool ok = true;
    for (double p : {2.0, 1.5}) {
      auto& sol = p == 2 ? cube2 : cube15;
      if (!sol) sol = solve_capacitary(p == 2 ? F2 : F15, cube(1), base());
      auto r = check_radial_monotonicity(*sol, {0, 0, 0});
      double ev = (p - 3) / (p - 1), eg = (1 - 3) / (p - 1);
      d += fmt(" p=%.1f", p) + fmt(" u %.3f", r.value_exponent) + fmt(" (%.2f)", ev) +
           fmt(" grad %.3f", r.grad_exponent) + fmt(" (%.2f)", eg) + fmt(" shell [%.2f,", r.shell_lo) +
           fmt(" %.2f]", r.shell_hi);
      ok = ok && r.shell_valid && std::abs(r.value_exponent - ev) <= 0.1 && std::abs(r.grad_exponent - eg) <= 0.1;
    }
    return ok;
  });

  MinkowskiInstance oct;
  oct.directions = kAxes;
  oct.weights.assign(6, 1.0);
  oct.structure = make_isotropic(3, 2);
  MinkowskiConfig mc;
  mc.solver = base();

  report(9, "Minkowski recovery", [&](std::string& d) {
    auto t0 = std::chrono::steady_clock::now();
    MinkowskiConfig c = mc;
    c.initial_perturbation = 0.25;
    c.return_unconverged = true;
    auto sol = solve_minkowski(oct, c);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // reference: the cube of capacity one
    if (!cube2) cube2 = solve_capacitary(F2, cube(1), base());
    double a = std::pow(cube2->capacity_energy, -1.0 / (3 - 2));
    auto grid = direction_grid(3, 1280);
    double cells = hausdorff_distance(sol.final_body, cube(a), grid).distance * sol.working_scale / sol.grid_h;
    double mass = 0;
    for (auto& at : sol.recovered_measure.atoms)
      mass = std::max(mass, std::abs(*sol.b_constant * at.mass / oct.weights[at.face] - 1));
    d = fmt("Hausdorff %.2f cells", cells) + fmt(", mass %.4f", mass) + fmt(", KKT %.4f", sol.kkt_residual) +
        fmt(", %.0f s", secs) + ", stop " + sol.stop_reason;
    return cells <= 3 && mass <= 0.1 && sol.kkt_residual < 0.1 && secs < 1800;
  });

  report(10, "uniqueness probe", [&](std::string& d) {
    auto rep = uniqueness_probe(oct, 2, {11, 12}, mc, 0.25);
    double cells = rep.hausdorff_cells.empty() ? 1e300 : rep.hausdorff_cells[0];
    d = fmt("Hausdorff %.2f cells", cells) + fmt(", concavity defect %.3g", rep.concavity_defect) +
        fmt(" bar %.3g", rep.defect_bar);
    return cells <= 3 && rep.concavity_defect <= rep.defect_bar;
  });

  report(11, "matrix lemma", [&](std::string& d) {
    bool ok = true;
    int viol = 0;
    double eq = 0;
    for (int dim = 2; dim <= 5; ++dim) {
      auto r = matrix_lemma_test(10000, dim, 1000 + dim);
      viol += r.violations;
      eq = std::max(eq, r.equality_residual);
      ok = ok && r.violations == 0 && r.equality_residual <= 1e-10;
    }
    d = "4 x 10000 trials, violations " + std::to_string(viol) + fmt(", equality residual %.2g", eq);
    return ok;
  });

  report(12, "fundamental-solution duality", [&](std::string& d) {
    auto A = dual_support(make_aniso_quadratic(3, 1.7, {3, 1, 0.4}));
    std::mt19937_64 rng(12);
    double worst = 0, hiso = 0;
    for (int k = 0; k < 1000; ++k) {
      Dir t = random_unit(3, rng);
      worst = std::max(worst, duality_residual(A, t.v));
      double X[3] = {2 * t[0], 2 * t[1], 2 * t[2]};
      hiso = std::max(hiso, std::abs(F2->h(X) - 2) / 2);
    }
    double brel = std::abs(F2->b() / (8 * kPi) - 1);
    d = fmt("inverse residual %.2g", worst) + fmt(", isotropic h %.2g", hiso) + fmt(", b rel %.2g", brel);
    return worst < 1e-6 && hiso <= 1e-8 && brel <= 1e-6;
  });

  report(13, "weak convergence", [&](std::string& d) {
    const Polytope C(kAxes, std::vector<double>(6, 1.0));
    auto r = weak_convergence_probe(F2, C, 0.2, 4, base());
    for (double x : r.distances) d += fmt(" %.4g", x);
    d += fmt(" floor %.3g", r.noise_floor);
    return r.monotone;
  });

  std::printf("%d of 13 criteria failed\n", failures);
  return failures ? 1 : 0;
}
