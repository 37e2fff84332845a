#include "capmink/lp.hpp"

#include <cmath>
#include <limits>

namespace capmink {

namespace {

// Dense two-phase tableau simplex with Bland tie-breaking.
class Tableau {
 public:
  Tableau(const std::vector<double>& A, const std::vector<double>& b, const std::vector<double>& c)
      : m_(int(b.size())), n_(int(c.size())), B_(m_), N_(n_ + 1),
        D_(m_ + 2, std::vector<double>(n_ + 2, 0.0)) {
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j) D_[i][j] = A[size_t(i) * n_ + j];
    for (int i = 0; i < m_; ++i) {
      B_[i] = n_ + i;
      D_[i][n_] = -1;
      D_[i][n_ + 1] = b[i];
    }
    for (int j = 0; j < n_; ++j) {
      N_[j] = j;
      D_[m_][j] = -c[j];
    }
    N_[n_] = -1;
    D_[m_ + 1][n_] = 1;
  }

  LPResult solve() {
    LPResult res;
    int r = 0;
    for (int i = 1; i < m_; ++i)
      if (D_[i][n_ + 1] < D_[r][n_ + 1]) r = i;
    if (m_ > 0 && D_[r][n_ + 1] < -kEps) {
      pivot(r, n_);
      if (!simplex(1) || D_[m_ + 1][n_ + 1] < -kEps) {
        res.status = LPResult::Infeasible;
        return res;
      }
      for (int i = 0; i < m_; ++i)
        if (B_[i] == -1) {
          int s = -1;
          for (int j = 0; j <= n_; ++j)
            if (s == -1 || D_[i][j] < D_[i][s] || (D_[i][j] == D_[i][s] && N_[j] < N_[s])) s = j;
          pivot(i, s);
        }
    }
    if (!simplex(2)) {
      res.status = LPResult::Unbounded;
      res.value = std::numeric_limits<double>::infinity();
      return res;
    }
    res.status = LPResult::Optimal;
    res.x.assign(n_, 0.0);
    for (int i = 0; i < m_; ++i)
      if (B_[i] < n_) res.x[B_[i]] = D_[i][n_ + 1];
    res.value = D_[m_][n_ + 1];
    return res;
  }

 private:
  static constexpr double kEps = 1e-11;

  void pivot(int r, int s) {
    double inv = 1.0 / D_[r][s];
    for (int i = 0; i < m_ + 2; ++i)
      if (i != r && D_[i][s] != 0) {
        double f = D_[i][s] * inv;
        for (int j = 0; j < n_ + 2; ++j)
          if (j != s) D_[i][j] -= D_[r][j] * f;
      }
    for (int j = 0; j < n_ + 2; ++j)
      if (j != s) D_[r][j] *= inv;
    for (int i = 0; i < m_ + 2; ++i)
      if (i != r) D_[i][s] *= -inv;
    D_[r][s] = inv;
    std::swap(B_[r], N_[s]);
  }

  bool simplex(int phase) {
    int x = phase == 1 ? m_ + 1 : m_;
    for (int guard = 0; guard < 100000; ++guard) {
      int s = -1;
      for (int j = 0; j <= n_; ++j) {
        if (phase == 2 && N_[j] == -1) continue;
        if (s == -1 || D_[x][j] < D_[x][s] || (D_[x][j] == D_[x][s] && N_[j] < N_[s])) s = j;
      }
      if (s == -1 || D_[x][s] > -kEps) return true;
      int r = -1;
      for (int i = 0; i < m_; ++i) {
        if (D_[i][s] < kEps) continue;
        if (r == -1) {
          r = i;
          continue;
        }
        double a = D_[i][n_ + 1] / D_[i][s], b = D_[r][n_ + 1] / D_[r][s];
        if (a < b || (a == b && B_[i] < B_[r])) r = i;
      }
      if (r == -1) return false;
      pivot(r, s);
    }
    return true;
  }

  int m_, n_;
  std::vector<int> B_, N_;
  std::vector<std::vector<double>> D_;
};

}  // namespace

LPResult lp_maximize(const std::vector<double>& A, const std::vector<double>& b,
                     const std::vector<double>& c, bool free_vars) {
  if (!free_vars) return Tableau(A, b, c).solve();
  const size_t m = b.size(), n = c.size();
  std::vector<double> A2(m * 2 * n), c2(2 * n);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) {
      A2[i * 2 * n + j] = A[i * n + j];
      A2[i * 2 * n + n + j] = -A[i * n + j];
    }
  for (size_t j = 0; j < n; ++j) {
    c2[j] = c[j];
    c2[n + j] = -c[j];
  }
  LPResult r = Tableau(A2, b, c2).solve();
  if (r.status == LPResult::Optimal) {
    std::vector<double> x(n);
    for (size_t j = 0; j < n; ++j) x[j] = r.x[j] - r.x[n + j];
    r.x = std::move(x);
  }
  return r;
}

}  // namespace capmink
