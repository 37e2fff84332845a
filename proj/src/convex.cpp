#include "capmink/convex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "capmink/error.hpp"
#include "capmink/lp.hpp"

namespace capmink {

namespace {

double dot(const double* a, const double* b, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double dist2(const double* a, const double* b, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

void cross(const double* a, const double* b, double* c) {
  c[0] = a[1] * b[2] - a[2] * b[1];
  c[1] = a[2] * b[0] - a[0] * b[2];
  c[2] = a[0] * b[1] - a[1] * b[0];
}

// Closest point on segment [a,b] to x.
double closest_on_segment(const double* x, const double* a, const double* b, int n, double* out) {
  double ab[3], ax[3];
  for (int i = 0; i < n; ++i) {
    ab[i] = b[i] - a[i];
    ax[i] = x[i] - a[i];
  }
  double L = dot(ab, ab, n);
  double t = L > 0 ? std::clamp(dot(ax, ab, n) / L, 0.0, 1.0) : 0.0;
  for (int i = 0; i < n; ++i) out[i] = a[i] + t * ab[i];
  return dist2(x, out, n);
}

std::pair<double, Point> chebyshev(const Polytope& P) {
  const int n = P.dim(), m = P.size();
  std::vector<double> A(size_t(m) * (n + 1)), b(m), c(n + 1, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < n; ++k) A[size_t(i) * (n + 1) + k] = P.normals()[i][k];
    A[size_t(i) * (n + 1) + n] = 1;
    b[i] = P.heights()[i];
  }
  c[n] = 1;
  LPResult r = lp_maximize(A, b, c, true);
  if (r.status != LPResult::Optimal) return {0.0, Point(n, 0.0)};
  return {r.x[n], Point(r.x.begin(), r.x.begin() + n)};
}

}  // namespace

Polytope::Polytope(std::vector<Point> normals, std::vector<double> heights)
    : normals_(std::move(normals)), heights_(std::move(heights)) {
  if (normals_.empty()) fail(ErrorCode::Domain, "polytope needs at least one normal");
  if (normals_.size() != heights_.size()) fail(ErrorCode::Domain, "normals and heights differ in length");
  n_ = int(normals_[0].size());
  if (n_ < 2 || n_ > 3) fail(ErrorCode::Domain, "polytopes are supported for n = 2, 3");
  for (size_t i = 0; i < normals_.size(); ++i) {
    if (int(normals_[i].size()) != n_) fail(ErrorCode::Domain, "normals of mixed dimension");
    double r = std::sqrt(dot(normals_[i].data(), normals_[i].data(), n_));
    if (!(r > 0)) fail(ErrorCode::Domain, "zero normal");
    for (auto& v : normals_[i]) v /= r;
    heights_[i] /= r;
  }
  for (size_t i = 0; i < normals_.size(); ++i)
    for (size_t j = i + 1; j < normals_.size(); ++j)
      if (dot(normals_[i].data(), normals_[j].data(), n_) > 1 - 1e-12)
        fail(ErrorCode::Domain, "normals must be pairwise distinct");
  enumerate();
}

void Polytope::enumerate() {
  const int m = size();
  bounded_ = true;
  std::vector<double> A(size_t(m) * n_);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < n_; ++k) A[size_t(i) * n_ + k] = normals_[i][k];
  bool empty = false;
  for (int k = 0; k < n_ && bounded_ && !empty; ++k)
    for (int sgn : {1, -1}) {
      std::vector<double> c(n_, 0.0);
      c[k] = sgn;
      LPResult r = lp_maximize(A, heights_, c, true);
      if (r.status == LPResult::Unbounded) bounded_ = false;
      if (r.status == LPResult::Infeasible) empty = true;
    }
  face_lookup_.assign(m, -1);
  if (!bounded_ || empty) return;

  double scale = 1;
  for (double q : heights_) scale = std::max(scale, std::abs(q));
  const double tol = 1e-9 * scale;
  auto try_vertex = [&](const std::vector<int>& S) {
    Eigen::MatrixXd M(n_, n_);
    Eigen::VectorXd rhs(n_);
    for (int r = 0; r < n_; ++r) {
      for (int k = 0; k < n_; ++k) M(r, k) = normals_[S[r]][k];
      rhs(r) = heights_[S[r]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (std::abs(lu.determinant()) < 1e-12) return;
    Eigen::VectorXd x = lu.solve(rhs);
    for (int i = 0; i < m; ++i)
      if (dot(normals_[i].data(), x.data(), n_) > heights_[i] + tol) return;
    for (auto& v : vertices_)
      if (dist2(v.data(), x.data(), n_) < tol * tol) return;
    vertices_.emplace_back(x.data(), x.data() + n_);
  };
  std::vector<int> S(n_);
  if (n_ == 2) {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) try_vertex({i, j});
  } else {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        for (int k = j + 1; k < m; ++k) try_vertex({i, j, k});
  }
  vertex_faces_.assign(vertices_.size(), {});
  for (size_t v = 0; v < vertices_.size(); ++v)
    for (int i = 0; i < m; ++i)
      if (std::abs(dot(normals_[i].data(), vertices_[v].data(), n_) - heights_[i]) <= tol)
        vertex_faces_[v].push_back(i);

  full_ = chebyshev(*this).first > 1e-9 * scale;
  if (!full_) return;

  for (int i = 0; i < m; ++i) {
    std::vector<int> on;
    for (size_t v = 0; v < vertices_.size(); ++v)
      if (std::find(vertex_faces_[v].begin(), vertex_faces_[v].end(), i) != vertex_faces_[v].end())
        on.push_back(int(v));
    if (int(on.size()) < n_) continue;
    Face F;
    F.index = i;
    F.normal = normals_[i];
    const double* xi = normals_[i].data();
    if (n_ == 2) {
      double t[2] = {-xi[1], xi[0]};
      auto lo = std::min_element(on.begin(), on.end(), [&](int a, int b) {
        return dot(vertices_[a].data(), t, 2) < dot(vertices_[b].data(), t, 2);
      });
      auto hi = std::max_element(on.begin(), on.end(), [&](int a, int b) {
        return dot(vertices_[a].data(), t, 2) < dot(vertices_[b].data(), t, 2);
      });
      F.loop = {*lo, *hi};
      F.area = std::sqrt(dist2(vertices_[*lo].data(), vertices_[*hi].data(), 2));
    } else {
      double c[3] = {0, 0, 0};
      for (int v : on)
        for (int k = 0; k < 3; ++k) c[k] += vertices_[v][k] / on.size();
      double e1[3], e2[3], seed[3] = {1, 0, 0};
      if (std::abs(xi[0]) > 0.9) seed[0] = 0, seed[1] = 1;
      cross(xi, seed, e1);
      double r = std::sqrt(dot(e1, e1, 3));
      for (double& v : e1) v /= r;
      cross(xi, e1, e2);
      std::vector<std::pair<double, int>> ang;
      for (int v : on) {
        double d[3];
        for (int k = 0; k < 3; ++k) d[k] = vertices_[v][k] - c[k];
        ang.push_back({std::atan2(dot(d, e2, 3), dot(d, e1, 3)), v});
      }
      std::sort(ang.begin(), ang.end());
      for (auto& a : ang) F.loop.push_back(a.second);
      double area = 0;
      for (size_t k = 0; k < F.loop.size(); ++k) {
        const double* a = vertices_[F.loop[k]].data();
        const double* b = vertices_[F.loop[(k + 1) % F.loop.size()]].data();
        double da[3], db[3], cr[3];
        for (int q = 0; q < 3; ++q) {
          da[q] = a[q] - c[q];
          db[q] = b[q] - c[q];
        }
        cross(da, db, cr);
        area += 0.5 * dot(cr, xi, 3);
      }
      F.area = area;
    }
    if (F.area <= 1e-12 * scale * scale) continue;
    face_lookup_[i] = int(faces_.size());
    faces_.push_back(std::move(F));
  }
}

double Polytope::support(const double* theta) const {
  if (!bounded_) fail(ErrorCode::Unbounded, "support function of an unbounded polytope");
  if (vertices_.empty()) fail(ErrorCode::DegenerateBody, "polytope is empty");
  double best = -std::numeric_limits<double>::infinity();
  for (auto& v : vertices_) best = std::max(best, dot(v.data(), theta, n_));
  return best;
}

bool Polytope::contains(const double* x, double tol) const {
  for (int i = 0; i < size(); ++i)
    if (dot(normals_[i].data(), x, n_) > heights_[i] + tol) return false;
  return true;
}

const Face* Polytope::face_of(int i) const {
  if (i < 0 || i >= size() || face_lookup_[i] < 0) return nullptr;
  return &faces_[face_lookup_[i]];
}

Polytope Polytope::scaled(double rho) const {
  std::vector<double> q(heights_);
  for (auto& v : q) v *= rho;
  return Polytope(normals_, q);
}

Polytope Polytope::translated(const double* z) const {
  std::vector<double> q(heights_);
  for (int i = 0; i < size(); ++i) q[i] += dot(normals_[i].data(), z, n_);
  return Polytope(normals_, q);
}

Polytope Polytope::pruned() const {
  std::vector<Point> N;
  std::vector<double> q;
  for (auto& F : faces_) {
    N.push_back(normals_[F.index]);
    q.push_back(heights_[F.index]);
  }
  if (N.empty()) return *this;
  return Polytope(N, q);
}

void sample_faces(const Polytope& P, double spacing, std::vector<Face>& out) {
  const int n = P.dim();
  out = P.faces();
  for (auto& F : out) {
    F.samples.clear();
    F.weights.clear();
    if (n == 2) {
      const Point& a = P.vertices()[F.loop[0]];
      const Point& b = P.vertices()[F.loop[1]];
      int k = std::max(1, int(std::ceil(F.area / spacing)));
      for (int s = 0; s < k; ++s) {
        double t = (s + 0.5) / k;
        F.samples.push_back({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
        F.weights.push_back(F.area / k);
      }
      continue;
    }
    double c[3] = {0, 0, 0};
    for (int v : F.loop)
      for (int q = 0; q < 3; ++q) c[q] += P.vertices()[v][q] / F.loop.size();
    for (size_t e = 0; e < F.loop.size(); ++e) {
      const double* a = P.vertices()[F.loop[e]].data();
      const double* b = P.vertices()[F.loop[(e + 1) % F.loop.size()]].data();
      double da[3], db[3], cr[3];
      for (int q = 0; q < 3; ++q) {
        da[q] = a[q] - c[q];
        db[q] = b[q] - c[q];
      }
      cross(da, db, cr);
      double area = 0.5 * std::sqrt(dot(cr, cr, 3));
      double longest = std::sqrt(std::max({dot(da, da, 3), dot(db, db, 3), dist2(a, b, 3)}));
      int k = std::max(1, int(std::ceil(longest / spacing)));
      // k^2 congruent subtriangles; sample each centroid
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k - i; ++j) {
          for (int up = 0; up < 2; ++up) {
            if (up == 1 && i + j + 1 >= k) continue;
            double u, v;
            if (up == 0) {
              u = (i + 1.0 / 3) / k;
              v = (j + 1.0 / 3) / k;
            } else {
              u = (i + 2.0 / 3) / k;
              v = (j + 2.0 / 3) / k;
            }
            Point x(3);
            for (int q = 0; q < 3; ++q) x[q] = c[q] + u * da[q] + v * db[q];
            F.samples.push_back(x);
            F.weights.push_back(area / (k * k));
          }
        }
    }
  }
}

std::vector<Face> gauss_faces(const Polytope& P, double spacing) {
  if (!P.bounded()) fail(ErrorCode::Unbounded, "polytope is unbounded");
  if (!P.full_dimensional()) fail(ErrorCode::DegenerateBody, "polytope has empty interior");
  std::vector<Face> out;
  sample_faces(P, spacing, out);
  return out;
}

struct ConvexBody::Impl {
  Kind kind;
  std::optional<Polytope> P;
  Ball B;
  double a = 0, b = 0;
  std::vector<ConvexBody> parts;
  int n = 0;
};

ConvexBody ConvexBody::polytope(Polytope P) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Polytope;
  impl->n = P.dim();
  impl->P = std::move(P);
  ConvexBody b;
  b.impl_ = impl;
  return b;
}

ConvexBody ConvexBody::ball(Point center, double radius) {
  if (center.size() < 2 || center.size() > 3) fail(ErrorCode::Domain, "ball center must have 2 or 3 entries");
  if (!(radius >= 0)) fail(ErrorCode::Domain, "ball radius must be nonnegative");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Ball;
  impl->n = int(center.size());
  impl->B = {std::move(center), radius};
  ConvexBody b;
  b.impl_ = impl;
  return b;
}

ConvexBody ConvexBody::combo(double a, const ConvexBody& A, double b, const ConvexBody& B) {
  if (!(a >= 0 && b >= 0)) fail(ErrorCode::Domain, "combination coefficients must be nonnegative");
  if (A.dim() != B.dim()) fail(ErrorCode::Domain, "combination of bodies of different dimension");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Combo;
  impl->n = A.dim();
  impl->a = a;
  impl->b = b;
  impl->parts = {A, B};
  ConvexBody r;
  r.impl_ = impl;
  return r;
}

ConvexBody::Kind ConvexBody::kind() const { return impl_->kind; }
int ConvexBody::dim() const { return impl_->n; }
const Polytope& ConvexBody::as_polytope() const {
  if (impl_->kind != Kind::Polytope) fail(ErrorCode::Domain, "body is not a polytope");
  return *impl_->P;
}
const Ball& ConvexBody::as_ball() const {
  if (impl_->kind != Kind::Ball) fail(ErrorCode::Domain, "body is not a ball");
  return impl_->B;
}
double ConvexBody::coef(int k) const { return k == 0 ? impl_->a : impl_->b; }
const ConvexBody& ConvexBody::part(int k) const { return impl_->parts.at(k); }

double ConvexBody::support(const double* theta) const {
  switch (impl_->kind) {
    case Kind::Polytope: return impl_->P->support(theta);
    case Kind::Ball: return dot(impl_->B.center.data(), theta, impl_->n) + impl_->B.radius;
    case Kind::Combo: {
      double s = 0;
      if (impl_->a > 0) s += impl_->a * impl_->parts[0].support(theta);
      if (impl_->b > 0) s += impl_->b * impl_->parts[1].support(theta);
      return s;
    }
  }
  return 0;
}

ConvexBody ConvexBody::scaled(double rho) const {
  if (!(rho > 0)) fail(ErrorCode::Domain, "scale factor must be positive");
  switch (impl_->kind) {
    case Kind::Polytope: return polytope(impl_->P->scaled(rho));
    case Kind::Ball: {
      Point c = impl_->B.center;
      for (auto& v : c) v *= rho;
      return ball(c, rho * impl_->B.radius);
    }
    case Kind::Combo: return combo(rho * impl_->a, impl_->parts[0], rho * impl_->b, impl_->parts[1]);
  }
  return *this;
}

ConvexBody ConvexBody::translated(const Point& z) const {
  switch (impl_->kind) {
    case Kind::Polytope: return polytope(impl_->P->translated(z.data()));
    case Kind::Ball: {
      Point c = impl_->B.center;
      for (size_t i = 0; i < c.size(); ++i) c[i] += z[i];
      return ball(c, impl_->B.radius);
    }
    case Kind::Combo: {
      int k = impl_->a > 0 ? 0 : 1;
      double s = k == 0 ? impl_->a : impl_->b;
      Point w(z);
      for (auto& v : w) v /= s;
      ConvexBody moved = impl_->parts[k].translated(w);
      return k == 0 ? combo(impl_->a, moved, impl_->b, impl_->parts[1])
                    : combo(impl_->a, impl_->parts[0], impl_->b, moved);
    }
  }
  return *this;
}

nlohmann::json ConvexBody::to_json() const {
  switch (impl_->kind) {
    case Kind::Polytope:
      return {{"kind", "polytope"}, {"normals", impl_->P->normals()}, {"heights", impl_->P->heights()}};
    case Kind::Ball:
      return {{"kind", "ball"}, {"center", impl_->B.center}, {"radius", impl_->B.radius}};
    case Kind::Combo:
      return {{"kind", "combo"},
              {"coefficients", {impl_->a, impl_->b}},
              {"parts", {impl_->parts[0].to_json(), impl_->parts[1].to_json()}}};
  }
  return {};
}

ConvexBody ConvexBody::from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("kind")) fail(ErrorCode::Schema, "body requires a kind");
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "polytope") {
      auto N = j.at("normals").get<std::vector<Point>>();
      auto q = j.at("heights").get<std::vector<double>>();
      return polytope(Polytope(N, q));
    }
    if (kind == "ball") return ball(j.at("center").get<Point>(), j.at("radius").get<double>());
    if (kind == "combo") {
      auto& parts = j.at("parts");
      if (!parts.is_array() || parts.size() != 2) fail(ErrorCode::Schema, "combo needs two parts");
      double a, b;
      if (j.contains("coefficients")) {
        auto c = j.at("coefficients").get<std::vector<double>>();
        if (c.size() != 2) fail(ErrorCode::Schema, "combo coefficients need two entries");
        a = c[0];
        b = c[1];
      } else {
        a = j.at("lambda").get<double>();
        b = 1 - a;
        if (a < 0 || a > 1) fail(ErrorCode::Schema, "combo lambda must lie in [0, 1]");
      }
      return combo(a, from_json(parts[0]), b, from_json(parts[1]));
    }
    fail(ErrorCode::Schema, "unknown body kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Schema, std::string("body schema: ") + e.what());
  }
}

double support_function(const ConvexBody& body, const Point& direction) {
  if (int(direction.size()) != body.dim()) fail(ErrorCode::Domain, "direction has wrong dimension");
  double r = std::sqrt(dot(direction.data(), direction.data(), body.dim()));
  if (std::abs(r - 1) > 1e-12) fail(ErrorCode::Domain, "direction must be a unit vector");
  return body.support(direction.data());
}

HausdorffResult hausdorff_distance(const ConvexBody& a, const ConvexBody& b, const std::vector<Dir>& grid) {
  HausdorffResult r;
  r.grid_size = int(grid.size());
  for (auto& d : grid) r.distance = std::max(r.distance, std::abs(a.support(d.v) - b.support(d.v)));
  return r;
}

Radii inner_outer_radius(const ConvexBody& body) { return Shape::realize(body).radii(); }

Polytope minkowski_sum(const std::vector<std::pair<double, const Polytope*>>& parts) {
  if (parts.empty()) fail(ErrorCode::Domain, "empty Minkowski sum");
  if (parts.size() == 1) return parts[0].second->scaled(parts[0].first);
  const int n = parts[0].second->dim();
  std::vector<Point> cand;
  auto add = [&](Point v) {
    double r = std::sqrt(dot(v.data(), v.data(), n));
    if (r < 1e-9) return;
    for (auto& x : v) x /= r;
    for (auto& c : cand)
      if (dot(c.data(), v.data(), n) > 1 - 1e-10) return;
    cand.push_back(std::move(v));
  };
  std::vector<std::vector<Point>> edges(parts.size());
  for (size_t k = 0; k < parts.size(); ++k) {
    const Polytope& P = *parts[k].second;
    if (!P.full_dimensional()) fail(ErrorCode::DegenerateBody, "Minkowski summand has empty interior");
    for (auto& F : P.faces()) add(F.normal);
    if (n == 3)
      for (auto& F : P.faces())
        for (size_t e = 0; e < F.loop.size(); ++e) {
          const Point& a = P.vertices()[F.loop[e]];
          const Point& b = P.vertices()[F.loop[(e + 1) % F.loop.size()]];
          edges[k].push_back({b[0] - a[0], b[1] - a[1], b[2] - a[2]});
        }
  }
  if (n == 3)
    for (size_t k = 0; k < parts.size(); ++k)
      for (size_t l = k + 1; l < parts.size(); ++l)
        for (auto& e : edges[k])
          for (auto& f : edges[l]) {
            Point c(3);
            cross(e.data(), f.data(), c.data());
            add(c);
            for (auto& v : c) v = -v;
            add(c);
          }
  std::vector<double> q(cand.size(), 0.0);
  for (size_t i = 0; i < cand.size(); ++i)
    for (auto& [a, P] : parts) q[i] += a * P->support(cand[i].data());
  return Polytope(cand, q).pruned();
}

namespace {

void flatten(const ConvexBody& b, double w, std::vector<std::pair<double, const Polytope*>>& polys,
             std::vector<std::pair<double, const Ball*>>& balls) {
  if (w == 0) return;
  switch (b.kind()) {
    case ConvexBody::Kind::Polytope: polys.push_back({w, &b.as_polytope()}); break;
    case ConvexBody::Kind::Ball: balls.push_back({w, &b.as_ball()}); break;
    case ConvexBody::Kind::Combo:
      flatten(b.part(0), w * b.coef(0), polys, balls);
      flatten(b.part(1), w * b.coef(1), polys, balls);
      break;
  }
}

}  // namespace

Shape Shape::realize(const ConvexBody& body) {
  Shape s;
  s.n_ = body.dim();
  std::vector<std::pair<double, const Polytope*>> polys;
  std::vector<std::pair<double, const Ball*>> balls;
  flatten(body, 1.0, polys, balls);
  s.center_.assign(s.n_, 0.0);
  for (auto& [w, B] : balls) {
    for (int i = 0; i < s.n_; ++i) s.center_[i] += w * B->center[i];
    s.radius_ += w * B->radius;
  }
  if (!polys.empty()) {
    for (auto& [w, P] : polys) {
      if (!P->bounded()) fail(ErrorCode::Unbounded, "polytope is unbounded");
      if (!P->full_dimensional()) fail(ErrorCode::DegenerateBody, "polytope has empty interior");
    }
    // a single unscaled polytope keeps its constraint indices
    Polytope core = (polys.size() == 1 && polys[0].first == 1.0) ? *polys[0].second : minkowski_sum(polys);
    bool shift = false;
    for (double c : s.center_) shift |= c != 0;
    s.core_ = shift ? core.translated(s.center_.data()) : core;
  } else if (!(s.radius_ > 0)) {
    fail(ErrorCode::DegenerateBody, "body has empty interior");
  }
  return s;
}

double Shape::nearest_core(const double* x, double* point) const {
  const Polytope& P = *core_;
  const int n = n_;
  double best = std::numeric_limits<double>::infinity();
  double tmp[3];
  for (auto& F : P.faces()) {
    const double* xi = F.normal.data();
    double h = dot(xi, x, n) - P.heights()[F.index];
    if (h <= 0) continue;
    if (n == 2) {
      double d = closest_on_segment(x, P.vertices()[F.loop[0]].data(), P.vertices()[F.loop[1]].data(), 2, tmp);
      if (d < best) {
        best = d;
        std::copy(tmp, tmp + 2, point);
      }
      continue;
    }
    double y[3];
    for (int k = 0; k < 3; ++k) y[k] = x[k] - h * xi[k];
    bool inside = true;
    for (size_t e = 0; e < F.loop.size() && inside; ++e) {
      const double* a = P.vertices()[F.loop[e]].data();
      const double* b = P.vertices()[F.loop[(e + 1) % F.loop.size()]].data();
      double ab[3], ay[3], cr[3];
      for (int k = 0; k < 3; ++k) {
        ab[k] = b[k] - a[k];
        ay[k] = y[k] - a[k];
      }
      cross(ab, ay, cr);
      if (dot(cr, xi, 3) < 0) inside = false;
    }
    if (inside) {
      std::copy(y, y + 3, point);
      return h;
    }
    for (size_t e = 0; e < F.loop.size(); ++e) {
      double d = closest_on_segment(x, P.vertices()[F.loop[e]].data(),
                                    P.vertices()[F.loop[(e + 1) % F.loop.size()]].data(), 3, tmp);
      if (d < best) {
        best = d;
        std::copy(tmp, tmp + 3, point);
      }
    }
  }
  return std::sqrt(best);
}

double Shape::signed_distance(const double* x) const {
  if (!core_) return std::sqrt(dist2(x, center_.data(), n_)) - radius_;
  const Polytope& P = *core_;
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < P.size(); ++i) m = std::max(m, dot(P.normals()[i].data(), x, n_) - P.heights()[i]);
  if (m <= 0) return m - radius_;
  double pt[3];
  return nearest_core(x, pt) - radius_;
}

double Shape::exit_fraction(const double* out, const double* in) const {
  if (!core_) {
    double d[3], o[3];
    for (int k = 0; k < n_; ++k) {
      d[k] = in[k] - out[k];
      o[k] = out[k] - center_[k];
    }
    double a = dot(d, d, n_), b = 2 * dot(o, d, n_), c = dot(o, o, n_) - radius_ * radius_;
    double disc = std::max(0.0, b * b - 4 * a * c);
    double t = (-b - std::sqrt(disc)) / (2 * a);
    return std::clamp(t, 0.0, 1.0);
  }
  if (radius_ == 0) {
    const Polytope& P = *core_;
    double t = 0;
    for (int i = 0; i < P.size(); ++i) {
      double a = dot(P.normals()[i].data(), out, n_) - P.heights()[i];
      if (a <= 0) continue;
      double slope = dot(P.normals()[i].data(), in, n_) - dot(P.normals()[i].data(), out, n_);
      if (slope < 0) t = std::max(t, a / -slope);
    }
    return std::clamp(t, 0.0, 1.0);
  }
  double lo = 0, hi = 1, x[3];
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    for (int k = 0; k < n_; ++k) x[k] = out[k] + mid * (in[k] - out[k]);
    (signed_distance(x) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void Shape::nearest(const double* x, double* point, double* normal) const {
  if (!core_) {
    double r = std::sqrt(dist2(x, center_.data(), n_));
    for (int k = 0; k < n_; ++k) {
      normal[k] = r > 0 ? (x[k] - center_[k]) / r : (k == 0);
      point[k] = center_[k] + radius_ * normal[k];
    }
    return;
  }
  const Polytope& P = *core_;
  int arg = 0;
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < P.size(); ++i) {
    if (!P.face_of(i)) continue;
    double v = dot(P.normals()[i].data(), x, n_) - P.heights()[i];
    if (v > m) {
      m = v;
      arg = i;
    }
  }
  if (m <= 0) {
    // faces tied for nearest share the normal evenly
    double scale = 1;
    for (double q : P.heights()) scale = std::max(scale, std::abs(q));
    double acc[3] = {0, 0, 0};
    for (int i = 0; i < P.size(); ++i) {
      if (!P.face_of(i)) continue;
      if (dot(P.normals()[i].data(), x, n_) - P.heights()[i] >= m - 1e-12 * scale)
        for (int k = 0; k < n_; ++k) acc[k] += P.normals()[i][k];
    }
    double an = std::sqrt(dot(acc, acc, n_));
    for (int k = 0; k < n_; ++k) {
      normal[k] = an > 0 ? acc[k] / an : P.normals()[arg][k];
      point[k] = x[k] + (radius_ - m) * P.normals()[arg][k];
    }
    return;
  }
  double pc[3];
  double d = nearest_core(x, pc);
  for (int k = 0; k < n_; ++k) {
    normal[k] = (x[k] - pc[k]) / d;
    point[k] = pc[k] + radius_ * normal[k];
  }
}

void Shape::feature_weights(const double* x, std::vector<std::pair<int, double>>& w) const {
  w.clear();
  if (!core_) return;
  const Polytope& P = *core_;
  const int n = n_;
  double pc[3], nu[3];
  int arg = -1;
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < P.size(); ++i) {
    if (!P.face_of(i)) continue;
    double v = dot(P.normals()[i].data(), x, n) - P.heights()[i];
    if (v > m) {
      m = v;
      arg = i;
    }
  }
  if (m <= 0) {
    double scale = 1;
    for (double q : P.heights()) scale = std::max(scale, std::abs(q));
    for (int i = 0; i < P.size(); ++i)
      if (P.face_of(i) && dot(P.normals()[i].data(), x, n) - P.heights()[i] >= m - 1e-12 * scale) w.push_back({i, 1.0});
    for (auto& e : w) e.second = 1.0 / w.size();
    if (w.empty()) w.push_back({arg, 1.0});
    return;
  }
  double d = nearest_core(x, pc);
  for (int k = 0; k < n; ++k) nu[k] = (x[k] - pc[k]) / d;
  double scale = 1;
  for (double q : P.heights()) scale = std::max(scale, std::abs(q));
  std::vector<int> act;
  for (int i = 0; i < P.size(); ++i)
    if (P.face_of(i) && dot(P.normals()[i].data(), pc, n) >= P.heights()[i] - 1e-9 * scale) act.push_back(i);
  if (act.size() <= 1) {
    w.push_back({act.empty() ? arg : act[0], 1.0});
    return;
  }
  auto N = [&](int i) { return P.normals()[i].data(); };
  if (act.size() == 2) {
    // conic coordinates of nu in the cone of the two normals
    double g = dot(N(act[0]), N(act[1]), n);
    double b0 = dot(nu, N(act[0]), n), b1 = dot(nu, N(act[1]), n);
    double det = 1 - g * g;
    double a0 = (b0 - g * b1) / det, a1 = (b1 - g * b0) / det;
    a0 = std::max(a0, 0.0);
    a1 = std::max(a1, 0.0);
    double s = a0 + a1;
    if (s <= 0) a0 = a1 = s = 1;
    w.push_back({act[0], a0 / s});
    w.push_back({act[1], a1 / s});
    return;
  }
  // vertex: fan of cones around the mean normal
  double c[3] = {0, 0, 0};
  for (int i : act)
    for (int k = 0; k < 3; ++k) c[k] += N(i)[k];
  double cr = std::sqrt(dot(c, c, 3));
  for (double& v : c) v /= cr;
  double e1[3], e2[3], seed[3] = {1, 0, 0};
  if (std::abs(c[0]) > 0.9) seed[0] = 0, seed[1] = 1;
  cross(c, seed, e1);
  double r1 = std::sqrt(dot(e1, e1, 3));
  for (double& v : e1) v /= r1;
  cross(c, e1, e2);
  std::sort(act.begin(), act.end(), [&](int a, int b) {
    return std::atan2(dot(N(a), e2, 3), dot(N(a), e1, 3)) < std::atan2(dot(N(b), e2, 3), dot(N(b), e1, 3));
  });
  const int k = int(act.size());
  for (int j = 0; j < k; ++j) {
    int ia = act[j], ib = act[(j + 1) % k];
    Eigen::Matrix3d M;
    for (int r = 0; r < 3; ++r) {
      M(r, 0) = c[r];
      M(r, 1) = N(ia)[r];
      M(r, 2) = N(ib)[r];
    }
    Eigen::Vector3d coef = M.colPivHouseholderQr().solve(Eigen::Vector3d(nu[0], nu[1], nu[2]));
    if (coef.minCoeff() < -1e-10) continue;
    coef = coef.cwiseMax(0.0);
    double s = coef.sum();
    std::vector<double> acc(k, coef(0) / k / s);
    acc[j] += coef(1) / s;
    acc[(j + 1) % k] += coef(2) / s;
    for (int t = 0; t < k; ++t) w.push_back({act[t], acc[t]});
    return;
  }
  int best = act[0];
  for (int i : act)
    if (dot(N(i), nu, 3) > dot(N(best), nu, 3)) best = i;
  w.push_back({best, 1.0});
}

double Shape::support(const double* theta) const {
  double s = radius_;
  if (core_) return s + core_->support(theta);
  return s + dot(center_.data(), theta, n_);
}

void Shape::bounding_box(double* lo, double* hi) const {
  for (int k = 0; k < n_; ++k) {
    double e[3] = {0, 0, 0};
    e[k] = 1;
    hi[k] = support(e);
    e[k] = -1;
    lo[k] = -support(e);
  }
}

Radii Shape::radii() const {
  Radii r;
  if (!core_) {
    r.r_in = radius_;
    r.r_out = std::sqrt(dot(center_.data(), center_.data(), n_)) + radius_;
    r.chebyshev_center = center_;
    return r;
  }
  for (auto& v : core_->vertices()) r.r_out = std::max(r.r_out, std::sqrt(dot(v.data(), v.data(), n_)));
  r.r_out += radius_;
  auto [rin, c] = chebyshev(*core_);
  r.r_in = rin + radius_;
  r.chebyshev_center = c;
  return r;
}

}  // namespace capmink
