#include "capmink/structure.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "capmink/error.hpp"
#include "capmink/sphere.hpp"

namespace capmink {

namespace {

constexpr int kMaxDim = 8;

double norm2(const double* v, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += v[i] * v[i];
  return s;
}

double dot(const double* a, const double* b, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Shift H until its Cholesky factorization exists.
void make_pd(double* H, int n) {
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> M(H, n, n);
  double scale = 0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(M(i, i)));
  if (scale == 0) scale = 1;
  double shift = 0;
  for (int k = 0; k < 60; ++k) {
    Eigen::LLT<Eigen::MatrixXd> llt(M + shift * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) break;
    shift = shift == 0 ? 1e-10 * scale : shift * 4;
  }
  for (int i = 0; i < n; ++i) M(i, i) += shift;
}

class Isotropic final : public Structure {
 public:
  using Structure::Structure;
  double f(const double* e) const override { return std::pow(norm2(e, n_), p_ / 2) / p_; }
  void grad(const double* e, double* g) const override {
    double s = norm2(e, n_);
    double c = s > 0 ? std::pow(s, p_ / 2 - 1) : 0;
    for (int i = 0; i < n_; ++i) g[i] = c * e[i];
  }
  void hess(const double* e, double* H) const override { eval_reg(e, 0, nullptr, H); }
  double eval_reg(const double* e, double eps, double* g, double* H) const override {
    double s = eps * eps + norm2(e, n_);
    double c = s > 0 ? std::pow(s, p_ / 2 - 1) : 0;
    if (g)
      for (int i = 0; i < n_; ++i) g[i] = c * e[i];
    if (H) {
      double d = s > 0 ? (p_ - 2) / s : 0;
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) H[i * n_ + j] = c * ((i == j) + d * e[i] * e[j]);
    }
    return std::pow(s, p_ / 2) / p_;
  }
  bool linear() const override { return p_ == 2.0; }
  std::string kind() const override { return "isotropic"; }
};

class AnisoQuadratic final : public Structure {
 public:
  AnisoQuadratic(int n, double p, std::vector<double> a) : Structure(n, p), a_(std::move(a)) {}
  double q(const double* e) const {
    double s = 0;
    for (int i = 0; i < n_; ++i) s += a_[i] * e[i] * e[i];
    return s;
  }
  double f(const double* e) const override { return std::pow(q(e), p_ / 2) / p_; }
  void grad(const double* e, double* g) const override { eval_reg(e, 0, g, nullptr); }
  void hess(const double* e, double* H) const override { eval_reg(e, 0, nullptr, H); }
  double eval_reg(const double* e, double eps, double* g, double* H) const override {
    double s = eps * eps + q(e);
    double c = s > 0 ? std::pow(s, p_ / 2 - 1) : 0;
    if (g)
      for (int i = 0; i < n_; ++i) g[i] = c * a_[i] * e[i];
    if (H) {
      double d = s > 0 ? (p_ - 2) / s : 0;
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
          H[i * n_ + j] = c * ((i == j) * a_[i] + d * a_[i] * e[i] * a_[j] * e[j]);
    }
    return std::pow(s, p_ / 2) / p_;
  }
  bool linear() const override { return p_ == 2.0; }
  std::string kind() const override { return "aniso_quadratic"; }
  nlohmann::json to_json() const override {
    auto j = Structure::to_json();
    j["weights"] = a_;
    return j;
  }

 private:
  std::vector<double> a_;
};

class Custom final : public Structure {
 public:
  Custom(int n, double p, std::function<double(const double*)> f,
         std::function<void(const double*, double*)> g)
      : Structure(n, p), f_(std::move(f)), g_(std::move(g)) {}
  double f(const double* e) const override { return f_(e); }
  void grad(const double* e, double* g) const override {
    if (g_) return g_(e, g);
    double r = std::sqrt(norm2(e, n_));
    double step = 1e-5 * (r > 0 ? r : 1);
    double x[kMaxDim];
    std::copy(e, e + n_, x);
    for (int i = 0; i < n_; ++i) {
      x[i] = e[i] + step;
      double fp = f_(x);
      x[i] = e[i] - step;
      double fm = f_(x);
      x[i] = e[i];
      g[i] = (fp - fm) / (2 * step);
    }
  }
  std::string kind() const override { return "custom"; }

 private:
  std::function<double(const double*)> f_;
  std::function<void(const double*, double*)> g_;
};

}  // namespace

Structure::Structure(int n, double p) : n_(n), p_(p) {
  if (n < 2 || n > kMaxDim) fail(ErrorCode::Domain, "dimension must lie in [2, 8]");
  if (!(p > 1 && p < n)) {
    std::ostringstream os;
    os << "exponent p = " << p << " outside (1, " << n << ")";
    fail(ErrorCode::Domain, os.str());
  }
}

void Structure::hess(const double* e, double* H) const {
  double r = std::sqrt(norm2(e, n_));
  double step = 1e-5 * (r > 0 ? r : 1);
  double x[kMaxDim], gp[kMaxDim], gm[kMaxDim];
  std::copy(e, e + n_, x);
  for (int j = 0; j < n_; ++j) {
    x[j] = e[j] + step;
    grad(x, gp);
    x[j] = e[j] - step;
    grad(x, gm);
    x[j] = e[j];
    for (int i = 0; i < n_; ++i) H[i * n_ + j] = (gp[i] - gm[i]) / (2 * step);
  }
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) H[i * n_ + j] = H[j * n_ + i] = 0.5 * (H[i * n_ + j] + H[j * n_ + i]);
}

// phi(eta/|eta|) (eps^2 + |eta|^2)^{p/2} with phi = f on the unit sphere.
double Structure::eval_reg(const double* e, double eps, double* g, double* H) const {
  double r2 = norm2(e, n_);
  if (eps == 0 && r2 > 0) {
    if (g) grad(e, g);
    if (H) {
      hess(e, H);
      make_pd(H, n_);
    }
    return f(e);
  }
  double s = eps * eps + r2;
  auto value = [&](const double* x) {
    double rr = std::sqrt(norm2(x, n_));
    if (rr < 1e-300) return std::pow(eps, p_) / p_;
    double u[kMaxDim];
    for (int i = 0; i < n_; ++i) u[i] = x[i] / rr;
    return f(u) * std::pow(eps * eps + rr * rr, p_ / 2);
  };
  auto gradient = [&](const double* x, double* out) {
    double rr2 = norm2(x, n_);
    double rr = std::sqrt(rr2);
    if (rr < 1e-300) {
      std::fill(out, out + n_, 0.0);
      return;
    }
    double u[kMaxDim], gu[kMaxDim];
    for (int i = 0; i < n_; ++i) u[i] = x[i] / rr;
    double phi = f(u);
    grad(u, gu);
    double ss = eps * eps + rr2;
    double sp = std::pow(ss, p_ / 2);
    double gu_u = dot(gu, u, n_);
    // grad of phi(x/|x|) is (gu - <gu,u> u)/|x|
    for (int i = 0; i < n_; ++i)
      out[i] = (gu[i] - gu_u * u[i]) / rr * sp + phi * p_ * std::pow(ss, p_ / 2 - 1) * x[i];
  };
  double val = value(e);
  if (g) gradient(e, g);
  if (H) {
    double step = 1e-5 * std::sqrt(s);
    double x[kMaxDim], gp[kMaxDim], gm[kMaxDim];
    std::copy(e, e + n_, x);
    for (int j = 0; j < n_; ++j) {
      x[j] = e[j] + step;
      gradient(x, gp);
      x[j] = e[j] - step;
      gradient(x, gm);
      x[j] = e[j];
      for (int i = 0; i < n_; ++i) H[i * n_ + j] = (gp[i] - gm[i]) / (2 * step);
    }
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) H[i * n_ + j] = H[j * n_ + i] = 0.5 * (H[i * n_ + j] + H[j * n_ + i]);
    make_pd(H, n_);
  }
  return val;
}

nlohmann::json Structure::to_json() const {
  return {{"kind", kind()}, {"n", n_}, {"p", p_}};
}

void Structure::calibrate() {
  std::mt19937_64 rng(0x5eed);
  std::vector<Dir> dirs;
  for (int i = 0; i < n_; ++i) {
    Dir d;
    d[i] = 1;
    dirs.push_back(d);
  }
  for (int k = 0; k < 2000; ++k) dirs.push_back(random_unit(n_, rng));
  double worst = 1;
  std::vector<double> H(n_ * n_);
  auto to_vec = [&](const Dir& d) {
    std::vector<double> v(n_);
    for (int i = 0; i < n_; ++i) v[i] = d[i];
    return v;
  };
  for (auto& d : dirs) {
    auto e = to_vec(d);
    hess(e.data(), H.data());
    Eigen::Map<Eigen::MatrixXd> M(H.data(), n_, n_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    double lmin = es.eigenvalues()(0);
    double sum = M.cwiseAbs().sum();
    if (lmin <= 0) lmin = 1e-300;
    worst = std::max({worst, 1 / lmin, sum});
  }
  alpha_ = 1.01 * worst;

  std::uniform_real_distribution<double> U(-1, 1);
  double lam = 0;
  std::vector<double> H2(n_ * n_);
  for (int k = 0; k < 2000; ++k) {
    auto e = to_vec(random_unit(n_, rng));
    auto w = to_vec(random_unit(n_, rng));
    double rho = std::pow(2.0, U(rng));
    double t = 0.05 + 0.95 * std::abs(U(rng));
    std::vector<double> e2(n_);
    double d2 = 0;
    for (int i = 0; i < n_; ++i) {
      e2[i] = rho * ((1 - t) * e[i] + t * w[i]);
    }
    double r2 = std::sqrt(norm2(e2.data(), n_));
    if (r2 < 0.5 || r2 > 2) continue;
    for (int i = 0; i < n_; ++i) d2 += (e2[i] - e[i]) * (e2[i] - e[i]);
    hess(e.data(), H.data());
    hess(e2.data(), H2.data());
    double s = 0;
    for (int i = 0; i < n_ * n_; ++i) s += std::abs(H[i] - H2[i]);
    lam = std::max(lam, s / std::sqrt(d2));
  }
  lambda_ = std::max(1.0, 1.01 * lam);
}

StructurePtr make_isotropic(int n, double p) {
  auto s = std::make_shared<Isotropic>(n, p);
  s->calibrate();
  return s;
}

StructurePtr make_aniso_quadratic(int n, double p, std::vector<double> weights) {
  if (int(weights.size()) != n) fail(ErrorCode::Domain, "weights must have length n");
  for (double a : weights)
    if (!(a > 0)) fail(ErrorCode::Domain, "aniso_quadratic weights must be positive");
  auto s = std::make_shared<AnisoQuadratic>(n, p, std::move(weights));
  s->calibrate();
  return s;
}

StructurePtr make_custom(int n, double p, std::function<double(const double*)> f,
                         std::function<void(const double*, double*)> grad) {
  auto s = std::make_shared<Custom>(n, p, std::move(f), std::move(grad));
  s->calibrate();
  return s;
}

StructurePtr structure_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::Schema, "structure must be a JSON object");
  if (!j.contains("kind") || !j.contains("n") || !j.contains("p"))
    fail(ErrorCode::Schema, "structure requires kind, n and p");
  std::string kind = j.at("kind").get<std::string>();
  int n = j.at("n").get<int>();
  double p = j.at("p").get<double>();
  if (kind == "isotropic") return make_isotropic(n, p);
  if (kind == "aniso_quadratic") {
    if (!j.contains("weights")) fail(ErrorCode::Schema, "aniso_quadratic requires weights");
    return make_aniso_quadratic(n, p, j.at("weights").get<std::vector<double>>());
  }
  fail(ErrorCode::Schema, "unknown structure kind '" + kind + "'");
}

nlohmann::json ValidationReport::to_json() const {
  return {{"samples", samples},
          {"homogeneity_worst", homogeneity_worst},
          {"euler_worst", euler_worst},
          {"ellipticity_lower", ellipticity_lower},
          {"ellipticity_upper", ellipticity_upper},
          {"monotonicity_min", monotonicity_min},
          {"monotonicity_max", monotonicity_max},
          {"lambda_sampled", lambda_sampled},
          {"alpha", alpha},
          {"homogeneity_ok", homogeneity_ok},
          {"euler_ok", euler_ok},
          {"ellipticity_ok", ellipticity_ok},
          {"monotonicity_ok", monotonicity_ok},
          {"pass", pass}};
}

ValidationReport validate_structure(const Structure& s, int sample_count, unsigned long long seed) {
  if (sample_count < 1) fail(ErrorCode::Domain, "sample_count must be >= 1");
  const int n = s.dim();
  const double p = s.p();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0, 1);
  auto log_uniform = [&](double lo, double hi) {
    return std::exp(std::log(lo) + U(rng) * (std::log(hi) - std::log(lo)));
  };
  auto sample = [&](double r) {
    Dir d = random_unit(n, rng);
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = r * d[i];
    return v;
  };
  ValidationReport rep;
  rep.samples = sample_count;
  rep.alpha = s.alpha();
  rep.ellipticity_lower = std::numeric_limits<double>::infinity();
  rep.monotonicity_min = std::numeric_limits<double>::infinity();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g(n), g2(n), H(n * n), H2(n * n), x(n);
  auto bad = [](double v) { return !std::isfinite(v); };
  for (int k = 0; k < sample_count; ++k) {
    double r = log_uniform(1e-3, 1e3);
    auto e = sample(r);
    double t = log_uniform(0.1, 10);
    double fe = s.f(e.data());
    for (int i = 0; i < n; ++i) x[i] = t * e[i];
    double ft = s.f(x.data());
    double ref = std::pow(t, p) * fe;
    double hom = ref > 0 ? std::abs(ft - ref) / ref : inf;
    rep.homogeneity_worst = std::max(rep.homogeneity_worst, bad(hom) ? inf : hom);

    s.grad(e.data(), g.data());
    double eul = fe > 0 ? std::abs(dot(g.data(), e.data(), n) - p * fe) / (p * fe) : inf;
    rep.euler_worst = std::max(rep.euler_worst, bad(eul) ? inf : eul);

    s.hess(e.data(), H.data());
    auto xi = sample(1.0);
    double q = 0, sum = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        q += xi[i] * H[i * n + j] * xi[j];
        sum += std::abs(H[i * n + j]);
      }
    double scale = std::pow(r, p - 2);
    rep.ellipticity_lower = std::min(rep.ellipticity_lower, s.alpha() * q / scale);
    rep.ellipticity_upper = std::max(rep.ellipticity_upper, sum / (s.alpha() * scale));

    double r2 = log_uniform(1e-3, 1e3);
    auto e2 = sample(r2);
    s.grad(e2.data(), g2.data());
    double num = 0, d2 = 0;
    for (int i = 0; i < n; ++i) {
      num += (g[i] - g2[i]) * (e[i] - e2[i]);
      d2 += (e[i] - e2[i]) * (e[i] - e2[i]);
    }
    double mono = num / (std::pow(r + r2, p - 2) * d2);
    if (bad(mono)) mono = -inf;
    rep.monotonicity_min = std::min(rep.monotonicity_min, mono);
    rep.monotonicity_max = std::max(rep.monotonicity_max, mono);

    auto e3 = sample(r * std::pow(2.0, 2 * U(rng) - 1));
    s.hess(e3.data(), H2.data());
    double hs = 0, dd = 0;
    for (int i = 0; i < n * n; ++i) hs += std::abs(H[i] - H2[i]);
    for (int i = 0; i < n; ++i) dd += (e[i] - e3[i]) * (e[i] - e3[i]);
    if (dd > 0) rep.lambda_sampled = std::max(rep.lambda_sampled, hs / (std::sqrt(dd) * std::pow(r, p - 3)));
  }
  rep.homogeneity_ok = rep.homogeneity_worst < kHomogeneityTol;
  rep.euler_ok = rep.euler_worst < kEulerTol;
  rep.ellipticity_ok = rep.ellipticity_lower >= 1 - 1e-9 && rep.ellipticity_upper <= 1 + 1e-9;
  rep.monotonicity_ok = rep.monotonicity_min > 0;
  rep.pass = rep.homogeneity_ok && rep.euler_ok && rep.ellipticity_ok && rep.monotonicity_ok;
  return rep;
}

double wulff_gauge(const Structure& s, const double* eta) {
  double m[kMaxDim] = {};
  for (int i = 0; i < s.dim(); ++i) m[i] = -eta[i];
  return std::pow(s.p() * s.f(m), 1 / s.p());
}

void wulff_gauge_grad(const Structure& s, const double* eta, double* g) {
  const int n = s.dim();
  double m[kMaxDim] = {};
  for (int i = 0; i < n; ++i) m[i] = -eta[i];
  double k = std::pow(s.p() * s.f(m), 1 / s.p());
  s.grad(m, g);
  double c = -1 / std::pow(k, s.p() - 1);
  for (int i = 0; i < n; ++i) g[i] *= c;
}

namespace {

// Tangential gradient of <X,w>/k(w) at the unit vector w; returns its norm.
double support_tangent(const Structure& s, const double* X, const double* w, double* gt) {
  const int n = s.dim();
  double gk[kMaxDim], g[kMaxDim];
  double k = wulff_gauge(s, w);
  wulff_gauge_grad(s, w, gk);
  double xw = dot(X, w, n);
  for (int i = 0; i < n; ++i) g[i] = X[i] / k - xw * gk[i] / (k * k);
  double gw = dot(g, w, n);
  for (int i = 0; i < n; ++i) gt[i] = g[i] - gw * w[i];
  return std::sqrt(norm2(gt, n));
}

void step_on_sphere(int n, const double* w, const double* d, double t, double* out) {
  for (int i = 0; i < n; ++i) out[i] = w[i] + t * d[i];
  double tn = std::sqrt(norm2(out, n));
  for (int i = 0; i < n; ++i) out[i] /= tn;
}

}  // namespace

double wulff_support(const Structure& s, const double* X, double* argmax, const SupportOptions& opt) {
  const int n = s.dim();
  double xn = std::sqrt(norm2(X, n));
  if (!(xn > 0)) fail(ErrorCode::Domain, "support function requested at the origin");
  auto F = [&](const double* w) { return dot(X, w, n) / wulff_gauge(s, w); };
  double best = -std::numeric_limits<double>::infinity();
  double best_w[kMaxDim];
  for (int r = 0; r < std::max(1, opt.restarts); ++r) {
    double w[kMaxDim] = {}, gt[kMaxDim] = {}, trial[kMaxDim] = {}, gtt[kMaxDim] = {};
    for (int i = 0; i < n; ++i) w[i] = X[i] / xn;
    if (r > 0) {
      // deterministic tilt toward a coordinate axis
      int axis = (r - 1) % n;
      double sgn = ((r - 1) / n) % 2 ? -1 : 1;
      w[axis] += 0.3 * sgn;
      double wn = std::sqrt(norm2(w, n));
      for (int i = 0; i < n; ++i) w[i] /= wn;
      if (dot(w, X, n) <= 0)
        for (int i = 0; i < n; ++i) w[i] = X[i] / xn;
    }
    double val = F(w);
    double gn = support_tangent(s, X, w, gt);
    double step = 1.0;
    bool done = false, polish = false;
    for (int it = 0; it < opt.max_iter && !done; ++it) {
      if (gn <= 1e-9 * std::abs(val) || gn == 0) {
        done = true;
        break;
      }
      double t = step / gn;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
        step_on_sphere(n, w, gt, t, trial);
        double tv = F(trial);
        if (!polish) {
          if (tv >= val + 1e-4 * t * gn * gn) {
            accepted = true;
          } else if (tv >= val - 1e-14 * std::abs(val) && t * gn < 1e-4) {
            // values are at roundoff; finish on the gradient norm
            polish = true;
          }
        }
        if (polish && !accepted) {
          double gnt = support_tangent(s, X, trial, gtt);
          accepted = gnt < gn;
        }
        if (accepted) {
          std::copy(trial, trial + n, w);
          val = std::max(val, tv);
          step = std::min(1.0, 2 * t * gn);
          gn = support_tangent(s, X, w, gt);
          break;
        }
      }
      if (!accepted) done = gn <= 1e-6 * std::abs(val);
      if (!accepted && !done) break;
    }
    if (!done && gn > 1e-6 * std::abs(val)) fail(ErrorCode::NonConvergence, "support maximization did not reach tolerance");
    if (val > best) {
      best = val;
      std::copy(w, w + n, best_w);
    }
  }
  if (argmax) {
    double k = wulff_gauge(s, best_w);
    for (int i = 0; i < n; ++i) argmax[i] = best_w[i] / k;
  }
  return best;
}

FundamentalSolution::FundamentalSolution(StructurePtr s, double b, SupportOptions opt, int quad_level)
    : s_(std::move(s)), b_(b), opt_(opt), quad_level_(quad_level) {
  c_ = std::pow(b_ / s_->p(), -1 / (s_->p() - 1));
}

double FundamentalSolution::exponent() const {
  return (s_->p() - s_->dim()) / (s_->p() - 1);
}

double FundamentalSolution::h(const double* X, double* grad_h) const {
  return wulff_support(*s_, X, grad_h, opt_);
}

double FundamentalSolution::G(const double* x, double* grad) const {
  const int n = s_->dim();
  double gh[kMaxDim];
  double hv = h(x, gh);
  double beta = exponent();
  double val = c_ * std::pow(hv, beta);
  if (grad) {
    double c = c_ * beta * std::pow(hv, beta - 1);
    for (int i = 0; i < n; ++i) grad[i] = c * gh[i];
  }
  return val;
}

FundamentalSolution dual_support(StructurePtr s, int quad_level, SupportOptions opt) {
  const int n = s->dim();
  const double p = s->p();
  if (!(p > 1 && p < n)) fail(ErrorCode::Domain, "dual_support requires 1 < p < n");
  auto integral = [&](int level) {
    return sphere_integral(n, level, [&](const Dir& d) {
      double X[kMaxDim] = {0};
      for (int i = 0; i < n; ++i) X[i] = d[i];
      return std::pow(wulff_support(*s, X, nullptr, opt), -double(n));
    });
  };
  if (n > 3) fail(ErrorCode::Domain, "fundamental solution quadrature implemented for n <= 3");
  double I;
  int used;
  if (quad_level > 0) {
    I = integral(quad_level);
    used = quad_level;
  } else {
    int level = n == 2 ? 64 : 8;
    double prev = integral(level);
    for (;;) {
      int next = level * 2;
      double cur = integral(next);
      level = next;
      if (std::abs(cur - prev) <= 1e-9 * std::abs(cur) || level >= (n == 2 ? 8192 : 256)) {
        I = cur;
        break;
      }
      prev = cur;
    }
    used = level;
  }
  double b = p * std::pow((n - p) / (p - 1), p - 1) * I;
  return FundamentalSolution(std::move(s), b, opt, used);
}

std::pair<double, std::vector<double>> fundsol_eval(const FundamentalSolution& F,
                                                    const std::vector<double>& x) {
  const int n = F.structure().dim();
  if (int(x.size()) != n) fail(ErrorCode::Domain, "point has wrong dimension");
  if (norm2(x.data(), n) == 0) fail(ErrorCode::Domain, "fundamental solution evaluated at the pole");
  std::vector<double> g(n);
  double v = F.G(x.data(), g.data());
  return {v, g};
}

double duality_residual(const FundamentalSolution& F, const double* X) {
  const Structure& s = F.structure();
  const int n = s.dim();
  double gh[kMaxDim], Y[kMaxDim], gk[kMaxDim];
  double hv = F.h(X, gh);
  for (int i = 0; i < n; ++i) Y[i] = hv * gh[i];
  double k = wulff_gauge(s, Y);
  wulff_gauge_grad(s, Y, gk);
  double r = 0;
  for (int i = 0; i < n; ++i) r += (k * gk[i] - X[i]) * (k * gk[i] - X[i]);
  return std::sqrt(r / norm2(X, n));
}

double level_set_min_curvature(const FundamentalSolution& F, int samples) {
  const int n = F.structure().dim();
  std::vector<Dir> dirs = n == 3 ? fibonacci_sphere(samples) : circle_grid(samples);
  double kmin = std::numeric_limits<double>::infinity();
  for (auto& d : dirs) {
    double w[3] = {d[0], d[1], d[2]};
    double hv = F.h(w);
    double x[3], gh[3];
    for (int i = 0; i < n; ++i) x[i] = w[i] / hv;
    F.h(x, gh);
    Eigen::MatrixXd Hs(n, n);
    const double step = 1e-4;
    for (int j = 0; j < n; ++j) {
      double xp[3], xm[3], gp[3], gm[3];
      std::copy(x, x + n, xp);
      std::copy(x, x + n, xm);
      xp[j] += step;
      xm[j] -= step;
      F.h(xp, gp);
      F.h(xm, gm);
      for (int i = 0; i < n; ++i) Hs(i, j) = (gp[i] - gm[i]) / (2 * step);
    }
    Hs = 0.5 * (Hs + Hs.transpose()).eval();
    Eigen::VectorXd nu(n);
    for (int i = 0; i < n; ++i) nu(i) = gh[i];
    double gn = nu.norm();
    nu /= gn;
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) - nu * nu.transpose();
    Eigen::MatrixXd T = P * Hs * P / gn;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    // one eigenvalue belongs to the normal direction (zero); skip it
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);
    std::sort(ev.begin(), ev.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    for (int i = 1; i < n; ++i) kmin = std::min(kmin, ev[i]);
  }
  return kmin;
}

const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::Domain: return "DomainError";
    case ErrorCode::Schema: return "SchemaError";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DegenerateBody: return "DegenerateBody";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::Unbounded: return "UnboundedBody";
    case ErrorCode::Inadmissible: return "InadmissibleInstance";
    case ErrorCode::LevelOutsideGrid: return "LevelOutsideGrid";
    case ErrorCode::DegenerateCollapse: return "DegenerateCollapse";
    case ErrorCode::Internal: return "InternalError";
  }
  return "Unknown";
}

}  // namespace capmink
