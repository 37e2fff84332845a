#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace capmink {

// p-homogeneous energy density f on R^n with A = grad f.
// Pointer arguments have length n; Hessians are n*n row-major.
class Structure {
 public:
  Structure(int n, double p);
  virtual ~Structure() = default;

  int dim() const { return n_; }
  double p() const { return p_; }

  virtual double f(const double* eta) const = 0;
  virtual void grad(const double* eta, double* g) const = 0;
  // Central differences of grad with step 1e-5*|eta| unless overridden.
  virtual void hess(const double* eta, double* H) const;

  // Smoothed density used by the solver. Writes gradient and (if H is
  // non-null) a positive definite Hessian.
  virtual double eval_reg(const double* eta, double eps, double* g, double* H) const;

  // True when A is linear, so the eps continuation is pointless.
  virtual bool linear() const { return false; }

  virtual std::string kind() const = 0;
  virtual nlohmann::json to_json() const;

  double alpha() const { return alpha_; }
  std::optional<double> lambda() const { return lambda_; }

 protected:
  // Sampled ellipticity and Hessian-Lipschitz ratios; called by factories.
  void calibrate();

  int n_;
  double p_;
  double alpha_ = 1.0;
  std::optional<double> lambda_;

  friend std::shared_ptr<const Structure> make_isotropic(int, double);
  friend std::shared_ptr<const Structure> make_aniso_quadratic(int, double, std::vector<double>);
  friend std::shared_ptr<const Structure> make_custom(int, double,
                                                      std::function<double(const double*)>,
                                                      std::function<void(const double*, double*)>);
};

using StructurePtr = std::shared_ptr<const Structure>;

StructurePtr make_isotropic(int n, double p);
StructurePtr make_aniso_quadratic(int n, double p, std::vector<double> weights);
// grad may be empty, in which case central differences of f are used.
StructurePtr make_custom(int n, double p, std::function<double(const double*)> f,
                         std::function<void(const double*, double*)> grad = {});
StructurePtr structure_from_json(const nlohmann::json& j);

struct ValidationReport {
  int samples = 0;
  double homogeneity_worst = 0;  // max relative |f(t eta) - t^p f(eta)|
  double euler_worst = 0;        // max relative |<A(eta),eta> - p f(eta)|
  double ellipticity_lower = 0;  // min alpha * xi'Hxi / (|eta|^{p-2}|xi|^2), want >= 1
  double ellipticity_upper = 0;  // max sum|H_ij| / (alpha |eta|^{p-2}), want <= 1
  double monotonicity_min = 0;   // min ratio of the monotonicity inequality, want > 0
  double monotonicity_max = 0;
  double lambda_sampled = 0;
  double alpha = 0;
  bool homogeneity_ok = false, euler_ok = false, ellipticity_ok = false, monotonicity_ok = false;
  bool pass = false;
  nlohmann::json to_json() const;
};

inline constexpr double kHomogeneityTol = 1e-8;
inline constexpr double kEulerTol = 1e-8;

ValidationReport validate_structure(const Structure& s, int sample_count, unsigned long long seed);

// Gauge k(eta) = (p f(-eta))^{1/p}; its unit ball is the Wulff set.
double wulff_gauge(const Structure& s, const double* eta);
void wulff_gauge_grad(const Structure& s, const double* eta, double* g);

struct SupportOptions {
  double tol = 1e-10;
  int restarts = 4;
  int max_iter = 400;
};

class FundamentalSolution {
 public:
  FundamentalSolution(StructurePtr s, double b, SupportOptions opt, int quad_level);

  const Structure& structure() const { return *s_; }
  StructurePtr structure_ptr() const { return s_; }
  double b() const { return b_; }
  int quadrature_level() const { return quad_level_; }

  // Support function of the Wulff set and its maximizer (= grad h).
  double h(const double* X, double* grad_h = nullptr) const;
  double G(const double* x, double* grad = nullptr) const;
  double exponent() const;  // (p-n)/(p-1)
  double prefactor() const { return c_; }

 private:
  StructurePtr s_;
  double b_;
  double c_;
  SupportOptions opt_;
  int quad_level_;
};

// Maximizes <X,eta> over {k <= 1}; the per-direction ascent behind h.
double wulff_support(const Structure& s, const double* X, double* argmax, const SupportOptions& opt);

// quad_level = 0 picks the resolution adaptively (relative change < 1e-9).
FundamentalSolution dual_support(StructurePtr s, int quad_level = 0, SupportOptions opt = {});

// Value and gradient of G; throws Domain at x = 0.
std::pair<double, std::vector<double>> fundsol_eval(const FundamentalSolution& F,
                                                    const std::vector<double>& x);

// |k(Y) grad k(Y) - X| / |X| with Y = h(X) grad h(X).
double duality_residual(const FundamentalSolution& F, const double* X);

// Minimum normal-section curvature of {h = 1} over sampled directions.
double level_set_min_curvature(const FundamentalSolution& F, int samples);

}  // namespace capmink
