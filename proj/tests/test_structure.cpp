#include <doctest.h>

#include <cmath>
#include <random>

#include "capmink/error.hpp"
#include "capmink/structure.hpp"
#include "oracles.hpp"

using namespace capmink;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

}  // namespace

TEST_CASE("isotropic density values") {
  auto s = make_isotropic(3, 2);
  double e1[3] = {1, 0, 0}, g[3];
  CHECK(s->f(e1) == doctest::Approx(0.5));
  s->grad(e1, g);
  CHECK(g[0] == doctest::Approx(1));
  CHECK(g[1] == doctest::Approx(0));

  double e2[3] = {3, 4, 0};
  CHECK(s->f(e2) == doctest::Approx(12.5));
  s->grad(e2, g);
  CHECK(g[0] == doctest::Approx(3));
  CHECK(g[1] == doctest::Approx(4));

  auto s25 = make_isotropic(3, 2.5);
  double e3[3] = {0, 0, 2};
  const double want = std::pow(2.0, 2.5) / 2.5;
  CHECK(s25->f(e3) == doctest::Approx(want).epsilon(1e-12));
  s25->grad(e3, g);
  auto fd = oracle::central_gradient([&](const double* x) { return std::pow(std::hypot(x[0], x[1], x[2]), 2.5) / 2.5; },
                                     e3, 3, 1e-6);
  CHECK(g[2] == doctest::Approx(std::pow(2.0, 1.5)).epsilon(1e-12));
  CHECK(g[2] == doctest::Approx(fd[2]).epsilon(1e-7));
}

TEST_CASE("anisotropic quadratic density") {
  auto iso = make_isotropic(3, 1.7);
  auto unit = make_aniso_quadratic(3, 1.7, {1, 1, 1});
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N(0, 1);
  for (int k = 0; k < 200; ++k) {
    double e[3] = {N(rng), N(rng), N(rng)}, g1[3], g2[3];
    CHECK(unit->f(e) == doctest::Approx(iso->f(e)).epsilon(1e-13));
    iso->grad(e, g1);
    unit->grad(e, g2);
    for (int d = 0; d < 3; ++d) CHECK(g2[d] == doctest::Approx(g1[d]).epsilon(1e-12));
  }

  auto a = make_aniso_quadratic(3, 2, {2, 1, 1});
  double e1[3] = {1, 0, 0}, g[3];
  CHECK(a->f(e1) == doctest::Approx(1));
  a->grad(e1, g);
  CHECK(g[0] == doctest::Approx(2));

  auto b = make_aniso_quadratic(3, 1.5, {4, 1, 1});
  double e[3] = {1, 1, 0};
  auto fref = [](const double* x) { return std::pow(4 * x[0] * x[0] + x[1] * x[1] + x[2] * x[2], 0.75) / 1.5; };
  CHECK(b->f(e) == doctest::Approx(fref(e)).epsilon(1e-12));
  b->grad(e, g);
  auto fd = oracle::central_gradient(fref, e, 3, 1e-6);
  for (int d = 0; d < 3; ++d) CHECK(g[d] == doctest::Approx(fd[d]).epsilon(1e-6).scale(1));

  CHECK(code_of([] { make_aniso_quadratic(3, 2, {1, 0, 1}); }) == ErrorCode::Domain);
}

TEST_CASE("structure validation") {
  auto r = validate_structure(*make_isotropic(3, 2), 500, 1);
  CHECK(r.pass);
  CHECK(r.homogeneity_worst < 1e-10);
  CHECK(r.euler_worst < 1e-10);

  auto r2 = validate_structure(*make_aniso_quadratic(3, 1.2, {9, 1, 1}), 500, 2);
  CHECK(r2.pass);
  CHECK(std::isfinite(r2.alpha));
  CHECK(r2.alpha >= 1);

  auto broken = make_custom(3, 2, [](const double* x) { return 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) + 1; });
  auto r3 = validate_structure(*broken, 200, 3);
  CHECK_FALSE(r3.homogeneity_ok);
  CHECK_FALSE(r3.pass);
}

TEST_CASE("Euler identity on every validated family") {
  for (auto s : {make_isotropic(3, 1.5), make_isotropic(2, 1.3), make_aniso_quadratic(3, 2.4, {1, 3, 0.5}),
                 make_aniso_quadratic(2, 1.6, {2, 0.7})}) {
    auto r = validate_structure(*s, 400, 5);
    CHECK(r.euler_worst < 1e-8);
    CHECK(r.monotonicity_min > 0);
    CHECK(r.pass);
  }
}

TEST_CASE("structure JSON") {
  auto s = structure_from_json({{"kind", "aniso_quadratic"}, {"n", 3}, {"p", 1.5}, {"weights", {1, 2, 3}}});
  auto j = s->to_json();
  auto t = structure_from_json(j);
  double e[3] = {0.3, -1.2, 0.8};
  CHECK(t->f(e) == doctest::Approx(s->f(e)).epsilon(1e-15));
  CHECK(code_of([] { structure_from_json({{"kind", "spline"}, {"n", 3}, {"p", 2}}); }) == ErrorCode::Schema);
  CHECK(code_of([] { structure_from_json({{"kind", "isotropic"}, {"p", 2}}); }) == ErrorCode::Schema);
}

TEST_CASE("isotropic support function and b") {
  auto F = dual_support(make_isotropic(3, 2));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> N(0, 1);
  for (int k = 0; k < 300; ++k) {
    double X[3] = {N(rng), N(rng), N(rng)};
    CHECK(F.h(X) == doctest::Approx(std::hypot(X[0], X[1], X[2])).epsilon(1e-8));
  }
  const double want = 2 * std::pow(1.0, 1) * oracle::sphere_area(3);
  CHECK(F.b() == doctest::Approx(want).epsilon(1e-6));
  CHECK(F.b() == doctest::Approx(8 * oracle::pi).epsilon(1e-6));

  auto F15 = dual_support(make_isotropic(3, 1.5));
  CHECK(F15.b() == doctest::Approx(1.5 * std::pow(3.0, 0.5) * 4 * oracle::pi).epsilon(1e-6));
}

TEST_CASE("anisotropic support function against dense maximization") {
  const std::vector<double> a = {4, 1, 0.5};
  auto s = make_aniso_quadratic(3, 1.5, a);
  auto F = dual_support(s);
  // Wulff gauge k(eta) = (p f(-eta))^{1/p} = sqrt(sum a eta^2)
  auto gauge = [&](const double* w) { return std::sqrt(a[0] * w[0] * w[0] + a[1] * w[1] * w[1] + a[2] * w[2] * w[2]); };
  std::mt19937_64 rng(9);
  std::normal_distribution<double> N(0, 1);
  for (int k = 0; k < 6; ++k) {
    double X[3] = {N(rng), N(rng), N(rng)};
    double ref = oracle::dense_support(gauge, X, 100000);
    CHECK(F.h(X) == doctest::Approx(ref).epsilon(1e-6));
    double closed = std::sqrt(X[0] * X[0] / a[0] + X[1] * X[1] / a[1] + X[2] * X[2] / a[2]);
    CHECK(F.h(X) == doctest::Approx(closed).epsilon(1e-9));
  }
}

TEST_CASE("p outside (1, n) is a domain error") {
  CHECK(code_of([] { dual_support(make_isotropic(3, 3)); }) == ErrorCode::Domain);
  CHECK(code_of([] { dual_support(make_isotropic(3, 3.5)); }) == ErrorCode::Domain);
  CHECK(code_of([] { make_isotropic(3, 1); }) == ErrorCode::Domain);
}

TEST_CASE("fundamental solution against the radial potential") {
  for (double p : {2.0, 1.5}) {
    auto F = dual_support(make_isotropic(3, p));
    for (double r : {0.5, 2.0, 7.0}) {
      auto [g, grad] = fundsol_eval(F, {0, r, 0});
      CHECK(g == doctest::Approx(oracle::isotropic_G(3, p, r)).epsilon(1e-8));
      double step = 1e-5 * r;
      double dg = (oracle::isotropic_G(3, p, r + step) - oracle::isotropic_G(3, p, r - step)) / (2 * step);
      CHECK(grad[1] == doctest::Approx(dg).epsilon(1e-6));
    }
  }
  auto F = dual_support(make_isotropic(3, 2));
  CHECK(fundsol_eval(F, {2, 0, 0}).first == doctest::Approx(1 / (8 * oracle::pi)).epsilon(1e-9));
  CHECK(code_of([&] { fundsol_eval(F, {0, 0, 0}); }) == ErrorCode::Domain);
}

TEST_CASE("homogeneity of h and G") {
  auto F = dual_support(make_aniso_quadratic(3, 1.6, {2, 1, 0.6}));
  const double e = F.exponent();
  CHECK(e == doctest::Approx((1.6 - 3) / 0.6));
  std::mt19937_64 rng(21);
  std::normal_distribution<double> N(0, 1);
  for (int k = 0; k < 100; ++k) {
    double X[3] = {N(rng), N(rng), N(rng)}, Y[3];
    double t = std::exp(N(rng));
    for (int d = 0; d < 3; ++d) Y[d] = t * X[d];
    CHECK(F.h(Y) == doctest::Approx(t * F.h(X)).epsilon(1e-10));
    CHECK(F.G(Y) == doctest::Approx(std::pow(t, e) * F.G(X)).epsilon(1e-10));
  }
}

TEST_CASE("inverse-map identity of the gauge and support function") {
  auto F = dual_support(make_aniso_quadratic(3, 2, {3, 1, 0.4}));
  std::mt19937_64 rng(8);
  std::normal_distribution<double> N(0, 1);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    double X[3] = {N(rng), N(rng), N(rng)};
    worst = std::max(worst, duality_residual(F, X));
  }
  CHECK(worst < 1e-6);
  CHECK(level_set_min_curvature(F, 200) > 0);
}

TEST_CASE("G is weakly harmonic away from the pole") {
  // divergence of A(grad G) by central differences; the residual must shrink
  // at least linearly with the difference step
  auto s = make_aniso_quadratic(3, 1.7, {2, 1, 0.7});
  auto F = dual_support(s);
  auto flux = [&](const double* x, double* A) {
    double g[3];
    F.G(x, g);
    s->grad(g, A);
  };
  auto residual = [&](double step) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> N(0, 1);
    double worst = 0;
    for (int k = 0; k < 30; ++k) {
      double x[3] = {N(rng), N(rng), N(rng)};
      double r = std::hypot(x[0], x[1], x[2]);
      for (double& c : x) c *= 1.5 / r;
      double div = 0, scale = 0;
      for (int d = 0; d < 3; ++d) {
        double a[3], b[3], Aa[3], Ab[3];
        for (int i = 0; i < 3; ++i) a[i] = b[i] = x[i];
        a[d] += step;
        b[d] -= step;
        flux(a, Aa);
        flux(b, Ab);
        div += (Aa[d] - Ab[d]) / (2 * step);
        scale += std::abs(Aa[d]) / 1.5;
      }
      worst = std::max(worst, std::abs(div) / scale);
    }
    return worst;
  };
  double r1 = residual(0.1), r2 = residual(0.05);
  CHECK(r2 < 0.6 * r1);
  CHECK(r2 < 1e-2);
}
