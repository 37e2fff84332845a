#include "capmink/measure.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "capmink/error.hpp"
#include "capmink/lp.hpp"

namespace capmink {

namespace {

constexpr double kPi = 3.14159265358979323846;

double dot(const double* a, const double* b, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double seg_distance(const double* x, const double* a, const double* b, int n) {
  double ab[3], ax[3];
  for (int k = 0; k < n; ++k) {
    ab[k] = b[k] - a[k];
    ax[k] = x[k] - a[k];
  }
  double L = dot(ab, ab, n);
  double t = L > 0 ? std::clamp(dot(ax, ab, n) / L, 0.0, 1.0) : 0.0;
  double s = 0;
  for (int k = 0; k < n; ++k) s += (ax[k] - t * ab[k]) * (ax[k] - t * ab[k]);
  return std::sqrt(s);
}

using Coef = std::vector<std::pair<int, double>>;

struct NodeField {
  int ch;
  double w[3];
};
using FieldFn = std::function<void(const double* x, const double* nu, double psi, std::vector<NodeField>&)>;

// Volume identity: for a field W vanishing away from the body,
//   integral over the exterior of T : grad W = -(p-1) integral over the boundary of f <nu, W>,
// with T_jk = A_j d_k u - f delta_jk. Band nodes get one W per channel from fn.
std::vector<double> domain_integrals(const CapacitarySolution& sol, int channels, double cutoff, const FieldFn& fn) {
  const Discretization& D = *sol.disc;
  const Grid& g = D.grid();
  const Shape& shape = D.shape();
  const Structure& s = *sol.structure;
  const int n = g.n;
  const double p = s.p();
  const size_t N = g.size();
  const auto& sd = D.distance();

  std::vector<int> band(N, -1);
  std::vector<std::vector<NodeField>> fields;
  double x[3] = {0, 0, 0}, pt[3], nu[3];
  std::vector<NodeField> c;
  for (size_t i = 0; i < N; ++i) {
    double sp = g.local_spacing(i);
    if (!(sd[i] < cutoff) || sd[i] < -2 * sp) continue;
    g.coords(i, x);
    shape.nearest(x, pt, nu);
    // flat over the inner half: the cells next to the boundary carry the
    // largest discretization error and see no gradient of psi
    double psi = std::clamp(2 * (cutoff - sd[i]) / cutoff, 0.0, 1.0);
    if (psi == 0) continue;
    c.clear();
    fn(x, nu, psi, c);
    band[i] = int(fields.size());
    fields.push_back(c);
  }

  std::vector<double> out(channels, 0.0);
  std::vector<int> chans;
  D.for_each_tet(sol.u, [&](const TetView& v) {
    const Tet& t = *v.tet;
    int bi[4];
    bool any = false;
    for (int a = 0; a <= n; ++a) {
      bi[a] = band[t.node[a]];
      any = any || bi[a] >= 0;
    }
    if (!any || v.weight <= 0) return;
    double A[3];
    s.grad(v.grad, A);
    double f = s.f(v.grad);
    chans.clear();
    for (int a = 0; a <= n; ++a)
      if (bi[a] >= 0)
        for (auto& e : fields[bi[a]])
          if (std::find(chans.begin(), chans.end(), e.ch) == chans.end()) chans.push_back(e.ch);
    for (int ch : chans) {
      double wv[3][4];
      for (int a = 0; a <= n; ++a)
        for (int k = 0; k < n; ++k) {
          wv[k][a] = 0;
          if (bi[a] >= 0)
            for (auto& e : fields[bi[a]])
              if (e.ch == ch) wv[k][a] += e.w[k];
        }
      double tw = 0, div = 0;
      for (int k = 0; k < n; ++k) {
        double gw[3];
        path_gradient(n, t, wv[k], gw);
        tw += v.grad[k] * dot(A, gw, n);
        div += gw[k];
      }
      out[ch] += v.weight * (tw - f * div);
    }
  });
  // density <A(grad u), grad u> = p f on the boundary
  for (double& o : out) o *= -p / (p - 1);
  return out;
}

// Per-face fields W_f with <xi_g, W_f> = delta_fg on every face g and no
// jump across edges: near an edge or vertex of f, W_f is a constant vector
// orthogonal to the other faces meeting there.
class FaceFields {
 public:
  FaceFields(const Polytope& poly, const std::vector<Face>& faces)
      : n_(poly.dim()), faces_(faces), verts_(poly.vertices()) {
    const auto& V = verts_;
    for (double q : poly.heights()) scale_ = std::max(scale_, std::abs(q));
    height_.resize(faces.size());
    vfaces_.assign(V.size(), {});
    for (size_t f = 0; f < faces.size(); ++f) {
      height_[f] = poly.heights()[faces[f].index];
      for (int v : faces[f].loop) vfaces_[v].push_back(int(f));
    }
    auto len = [&](int a, int b) {
      double s = 0;
      for (int k = 0; k < n_; ++k) s += (V[a][k] - V[b][k]) * (V[a][k] - V[b][k]);
      return std::sqrt(s);
    };
    // vertex balls are disjoint
    std::vector<double> dv(V.size(), 1e300);
    for (auto& F : faces) {
      const size_t L = F.loop.size();
      for (size_t e = 0; e < L; ++e) {
        if (n_ == 2 && e == 1) break;
        int a = F.loop[e], b = F.loop[(e + 1) % L];
        double l = len(a, b);
        dv[a] = std::min(dv[a], 0.45 * l);
        dv[b] = std::min(dv[b], 0.45 * l);
      }
    }
    zones_.resize(faces.size());
    for (size_t f = 0; f < faces.size(); ++f) {
      const Face& F = faces[f];
      const size_t L = F.loop.size();
      for (int v : F.loop) {
        Zone z;
        z.kind = 0;
        z.a = v;
        z.delta = dv[v];
        z.faces = vfaces_[v];
        Eigen::MatrixXd M(z.faces.size(), n_);
        Eigen::VectorXd r(z.faces.size());
        for (size_t i = 0; i < z.faces.size(); ++i) {
          for (int k = 0; k < n_; ++k) M(i, k) = faces[z.faces[i]].normal[k];
          r(i) = z.faces[i] == int(f) ? 1.0 : 0.0;
        }
        Eigen::VectorXd sol = M.completeOrthogonalDecomposition().solve(r);
        for (int k = 0; k < n_; ++k) z.v[k] = sol(k);
        zones_[f].push_back(z);
      }
      if (n_ != 3) continue;
      for (size_t e = 0; e < L; ++e) {
        int a = F.loop[e], b = F.loop[(e + 1) % L];
        int j = -1;
        for (int g : vfaces_[a])
          if (g != int(f) && std::find(vfaces_[b].begin(), vfaces_[b].end(), g) != vfaces_[b].end()) j = g;
        if (j < 0) continue;
        Zone z;
        z.kind = 1;
        z.a = a;
        z.b = b;
        z.faces = {int(f), j};
        const double* xi = F.normal.data();
        const double* xj = faces[j].normal.data();
        double c = dot(xi, xj, 3);
        for (int k = 0; k < 3; ++k) z.v[k] = (xi[k] - c * xj[k]) / (1 - c * c);
        // two edge bands meet only inside the core of a vertex ball
        double s = std::min(corner_sine(f, a), corner_sine(f, b));
        s = std::min({s, corner_sine(j, a), corner_sine(j, b)});
        z.delta = 0.5 * std::min(dv[a], dv[b]) * s;
        zones_[f].push_back(z);
      }
    }
  }

  int size() const { return int(faces_.size()); }

  // Fields at the boundary point y, scaled by psi.
  void eval(const double* y, double psi, std::vector<NodeField>& out) const {
    const double tol = 1e-9 * scale_;
    on_.assign(faces_.size(), 0);
    for (size_t f = 0; f < faces_.size(); ++f) on_[f] = dot(faces_[f].normal.data(), y, n_) >= height_[f] - tol;
    for (size_t f = 0; f < faces_.size(); ++f) {
      double acc[3] = {0, 0, 0}, sv = 0, se = 0;
      for (const Zone& z : zones_[f]) {
        if (z.kind != 0) continue;
        double c = chi(dist_point(y, z.a) / z.delta);
        if (c <= 0 || !touches(z)) continue;
        sv += c;
        for (int k = 0; k < n_; ++k) acc[k] += c * z.v[k];
      }
      double rem = std::max(0.0, 1 - sv);
      for (const Zone& z : zones_[f]) {
        if (z.kind != 1 || rem <= 0) continue;
        double c = rem * chi(seg_distance(y, verts_[z.a].data(), verts_[z.b].data(), n_) / z.delta);
        if (c <= 0 || !touches(z)) continue;
        se += c;
        for (int k = 0; k < n_; ++k) acc[k] += c * z.v[k];
      }
      if (on_[f]) {
        double c = std::max(0.0, rem - se);
        for (int k = 0; k < n_; ++k) acc[k] += c * faces_[f].normal[k];
      }
      if (acc[0] == 0 && acc[1] == 0 && acc[2] == 0) continue;
      NodeField nf{int(f), {0, 0, 0}};
      for (int k = 0; k < n_; ++k) nf.w[k] = psi * acc[k];
      out.push_back(nf);
    }
  }

 private:
  struct Zone {
    int kind;  // 0 vertex, 1 edge
    int a = -1, b = -1;
    double delta = 0;
    double v[3] = {0, 0, 0};
    std::vector<int> faces;  // faces the zone may be evaluated on
  };

  static double chi(double t) { return std::clamp(2 - 2 * t, 0.0, 1.0); }

  bool touches(const Zone& z) const {
    for (int g : z.faces)
      if (on_[g]) return true;
    return false;
  }

  double dist_point(const double* y, int v) const {
    double s = 0;
    for (int k = 0; k < n_; ++k) s += (y[k] - verts_[v][k]) * (y[k] - verts_[v][k]);
    return std::sqrt(s);
  }

  // sin of half the interior angle of face f at vertex v
  double corner_sine(size_t f, int v) const {
    const auto& loop = faces_[f].loop;
    const size_t L = loop.size();
    size_t i = std::find(loop.begin(), loop.end(), v) - loop.begin();
    if (i == L) return 1;
    const Point& P = vert(v);
    const Point& A = vert(loop[(i + L - 1) % L]);
    const Point& B = vert(loop[(i + 1) % L]);
    double u[3], w[3];
    for (int k = 0; k < 3; ++k) {
      u[k] = A[k] - P[k];
      w[k] = B[k] - P[k];
    }
    double c = dot(u, w, 3) / std::sqrt(dot(u, u, 3) * dot(w, w, 3));
    return std::sqrt(std::max(0.0, 0.5 * (1 - c)));
  }
  const Point& vert(int v) const { return verts_[v]; }

  int n_;
  std::vector<Face> faces_;
  std::vector<Point> verts_;
  std::vector<double> height_;
  std::vector<std::vector<int>> vfaces_;
  std::vector<std::vector<Zone>> zones_;
  double scale_ = 1;
  mutable std::vector<char> on_;
};

// Gradient of the interpolated field by central differences.
void grad_at(const Grid& g, const std::vector<double>& u, const double* x, double step, double* out) {
  double y[3];
  for (int d = 0; d < g.n; ++d) {
    std::copy(x, x + g.n, y);
    y[d] = x[d] + step;
    double up = g.interpolate(u, y);
    y[d] = x[d] - step;
    double dn = g.interpolate(u, y);
    out[d] = (up - dn) / (2 * step);
  }
}

}  // namespace

double default_cutoff(const CapacitarySolution& sol) {
  Radii r = sol.disc->shape().radii();
  return std::max(6 * sol.grid().h, 1.5 * r.r_in);
}

Point SurfaceMeasure::centroid() const {
  Point c(n, 0.0);
  for (auto& a : atoms)
    for (int k = 0; k < n; ++k) c[k] += a.mass * a.xi[k];
  return c;
}

nlohmann::json SurfaceMeasure::to_json() const {
  nlohmann::json at = nlohmann::json::array();
  for (auto& a : atoms) {
    nlohmann::json e = {{"xi", a.xi}, {"mass", a.mass}};
    if (a.face >= 0) e["face"] = a.face;
    if (a.low_confidence) e["low_confidence"] = true;
    e["direction_error_deg"] = a.direction_error_deg;
    at.push_back(e);
  }
  nlohmann::json j = {{"atoms", at}, {"total_mass", total_mass}, {"capacity", capacity}, {"centroid", centroid()}};
  if (!method.empty()) j["method"] = method;
  if (!structure.is_null()) j["structure"] = structure;
  if (!body.is_null()) j["body"] = body;
  return j;
}

SurfaceMeasure SurfaceMeasure::from_json(const nlohmann::json& j) {
  SurfaceMeasure m;
  try {
    for (auto& e : j.at("atoms")) {
      Atom a;
      a.xi = e.at("xi").get<Point>();
      a.mass = e.at("mass").get<double>();
      a.face = e.value("face", -1);
      if (a.mass < 0) fail(ErrorCode::Schema, "atom masses must be nonnegative");
      m.atoms.push_back(a);
    }
    m.capacity = j.value("capacity", 0.0);
    if (j.contains("structure")) m.structure = j["structure"];
    if (j.contains("body")) m.body = j["body"];
    m.method = j.value("method", std::string());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Schema, std::string("surface measure: ") + e.what());
  }
  if (m.atoms.empty()) fail(ErrorCode::Schema, "surface measure has no atoms");
  m.n = int(m.atoms[0].xi.size());
  for (auto& a : m.atoms) {
    if (int(a.xi.size()) != m.n) fail(ErrorCode::Schema, "atom directions differ in dimension");
    m.total_mass += a.mass;
  }
  return m;
}

double boundary_integral(const CapacitarySolution& sol, const std::function<double(const double*)>& g,
                         double cutoff) {
  if (!sol.disc) fail(ErrorCode::Domain, "empty solution");
  if (cutoff <= 0) cutoff = default_cutoff(sol);
  const int n = sol.grid().n;
  auto r = domain_integrals(sol, 1, cutoff, [&](const double*, const double* nu, double psi, std::vector<NodeField>& c) {
    NodeField e{0, {0, 0, 0}};
    double gv = g(nu);
    for (int k = 0; k < n; ++k) e.w[k] = psi * gv * nu[k];
    c.push_back(e);
  });
  return r[0];
}

double support_integral(const CapacitarySolution& sol, const ConvexBody& K, double cutoff) {
  return boundary_integral(sol, [&](const double* nu) { return K.support(nu); }, cutoff);
}

double own_support_integral(const CapacitarySolution& sol, double cutoff) {
  if (!sol.disc) fail(ErrorCode::Domain, "empty solution");
  if (cutoff <= 0) cutoff = default_cutoff(sol);
  const int n = sol.grid().n;
  // <nu, x> is the support function on the boundary; x is smooth at edges
  auto r = domain_integrals(sol, 1, cutoff, [&](const double* x, const double*, double psi, std::vector<NodeField>& c) {
    NodeField e{0, {0, 0, 0}};
    for (int k = 0; k < n; ++k) e.w[k] = psi * x[k];
    c.push_back(e);
  });
  return r[0];
}

SurfaceMeasure face_measure(const CapacitarySolution& sol, const Polytope& poly, double offset,
                            const MeasureOptions& opt) {
  if (!sol.disc) fail(ErrorCode::Domain, "empty solution");
  const Discretization& D = *sol.disc;
  const Shape& shape = D.shape();
  const Grid& g = D.grid();
  const int n = g.n;
  const Structure& s = *sol.structure;
  if (poly.dim() != n) fail(ErrorCode::Domain, "polytope dimension differs from the solution");
  if (!shape.has_core() || shape.radius() > 0) fail(ErrorCode::Domain, "face masses need a polytope body");
  if (!(offset >= 1 && offset <= 4)) fail(ErrorCode::Domain, "offset must lie in [1, 4] grid cells");

  std::vector<Face> faces = gauss_faces(poly, 0.5 * g.h);

  SurfaceMeasure m;
  m.n = n;
  m.capacity = sol.capacity_energy;
  m.structure = s.to_json();
  m.body = sol.body.to_json();
  m.method = opt.method == MeasureMethod::Domain ? "domain" : "trace";

  std::vector<double> dom;
  if (opt.method == MeasureMethod::Domain) {
    double cutoff = opt.cutoff > 0 ? opt.cutoff : default_cutoff(sol);
    FaceFields ff(poly, faces);
    double pt[3], nn[3];
    dom = domain_integrals(sol, ff.size(), cutoff, [&](const double* x, const double*, double psi, std::vector<NodeField>& c) {
      shape.nearest(x, pt, nn);
      ff.eval(pt, psi, c);
    });
  }

  const double h = g.h, o = offset * h;
  for (size_t f = 0; f < faces.size(); ++f) {
    const Face& F = faces[f];
    Atom a;
    a.xi = F.normal;
    a.face = F.index;
    a.low_confidence = F.area / std::pow(h, n - 1) < 4;
    double kept = 0, mass = 0, dir[3] = {0, 0, 0};
    for (size_t q = 0; q < F.samples.size(); ++q) {
      const double* y = F.samples[q].data();
      double edge = 1e300;
      for (size_t e = 0; e < F.loop.size(); ++e) {
        size_t e2 = (e + 1) % F.loop.size();
        if (n == 2 && e == 1) break;
        edge = std::min(edge, seg_distance(y, poly.vertices()[F.loop[e]].data(), poly.vertices()[F.loop[e2]].data(), n));
      }
      if (edge < 2 * h) continue;
      // u = 1 on the face, so the trace is a normal derivative: fit a quadratic
      // through the face value to u at o, o + h, o + 2h
      double gr[3], z[3], dk[4] = {0, o, o + h, o + 2 * h}, uk[4] = {1, 0, 0, 0};
      for (int k = 1; k < 4; ++k) {
        for (int d = 0; d < n; ++d) z[d] = y[d] + dk[k] * F.normal[d];
        uk[k] = g.interpolate(sol.u, z);
      }
      for (int d = 0; d < n; ++d) z[d] = y[d] + o * F.normal[d];
      grad_at(g, sol.u, z, h, gr);
      // least squares for u - 1 = a d + b d^2
      double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
      for (int k = 1; k < 4; ++k) {
        double d1 = dk[k], d2 = dk[k] * dk[k], v = uk[k] - 1;
        s11 += d1 * d1;
        s12 += d1 * d2;
        s22 += d2 * d2;
        r1 += d1 * v;
        r2 += d2 * v;
      }
      double slope = (r1 * s22 - r2 * s12) / (s11 * s22 - s12 * s12);
      double g0[3], A[3];
      for (int d = 0; d < n; ++d) g0[d] = slope * F.normal[d];
      s.grad(g0, A);
      mass += F.weights[q] * dot(A, g0, n);
      kept += F.weights[q];
      double gn = std::sqrt(dot(gr, gr, n));
      if (gn > 0)
        for (int d = 0; d < n; ++d) dir[d] -= F.weights[q] * gr[d] / gn;
    }
    double dn = std::sqrt(dot(dir, dir, n));
    if (dn > 0) a.direction_error_deg = std::acos(std::clamp(dot(dir, F.normal.data(), n) / dn, -1.0, 1.0)) * 180 / kPi;
    if (kept == 0) a.low_confidence = true;
    if (opt.method == MeasureMethod::Domain)
      a.mass = std::max(dom[f], 0.0);
    else
      a.mass = kept > 0 ? mass * F.area / kept : 0.0;
    m.total_mass += a.mass;
    m.atoms.push_back(a);
  }
  return m;
}

double bounded_lipschitz(const SurfaceMeasure& a, const SurfaceMeasure& b) {
  if (a.n != b.n) fail(ErrorCode::Domain, "measures live on spheres of different dimension");
  const size_t ma = a.atoms.size(), mb = b.atoms.size();
  double sa = 0, sb = 0;
  for (auto& x : a.atoms) sa += x.mass;
  for (auto& x : b.atoms) sb += x.mass;
  // partial transport with cost min(d, 2): unmatched mass costs 1 per unit
  std::vector<std::pair<size_t, size_t>> pairs;
  std::vector<double> cost;
  for (size_t i = 0; i < ma; ++i)
    for (size_t j = 0; j < mb; ++j) {
      double d = 0;
      for (int k = 0; k < a.n; ++k) d += (a.atoms[i].xi[k] - b.atoms[j].xi[k]) * (a.atoms[i].xi[k] - b.atoms[j].xi[k]);
      d = std::sqrt(d);
      if (d < 2) {
        pairs.push_back({i, j});
        cost.push_back(2 - d);
      }
    }
  if (pairs.empty()) return sa + sb;
  const size_t V = pairs.size(), R = ma + mb;
  std::vector<double> A(R * V, 0.0), rhs(R);
  for (size_t v = 0; v < V; ++v) {
    A[pairs[v].first * V + v] = 1;
    A[(ma + pairs[v].second) * V + v] = 1;
  }
  for (size_t i = 0; i < ma; ++i) rhs[i] = a.atoms[i].mass;
  for (size_t j = 0; j < mb; ++j) rhs[ma + j] = b.atoms[j].mass;
  LPResult r = lp_maximize(A, rhs, cost, false);
  if (r.status != LPResult::Optimal) fail(ErrorCode::Internal, "transport LP failed");
  return std::max(0.0, sa + sb - r.value);
}

nlohmann::json WeakConvergenceReport::to_json() const {
  return {{"deltas", deltas},
          {"distances", distances},
          {"capacities", capacities},
          {"target_capacity", target_capacity},
          {"noise_floor", noise_floor},
          {"monotone", monotone}};
}

WeakConvergenceReport weak_convergence_probe(std::shared_ptr<const FundamentalSolution> F, const Polytope& target,
                                             double scale, int steps, const SolverConfig& cfg, std::uint64_t seed) {
  if (steps < 1) fail(ErrorCode::Domain, "steps must be positive");
  if (!(scale >= 0 && scale < 1)) fail(ErrorCode::Domain, "perturbation scale must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  std::vector<double> w(target.size());
  for (double& v : w) v = U(rng);

  Radii rt = Shape::realize(ConvexBody::polytope(target)).radii();
  auto body_at = [&](double delta) {
    std::vector<double> q = target.heights();
    // perturb relative to the inner center so faces move along their normals
    for (size_t i = 0; i < q.size(); ++i) {
      double c = dot(target.normals()[i].data(), rt.chebyshev_center.data(), target.dim());
      q[i] = c + (q[i] - c) * (1 + delta * w[i]);
    }
    return Polytope(target.normals(), q);
  };

  SolverConfig c = cfg;
  if (!c.frame) {
    std::vector<GridFrame> frames;
    frames.push_back(make_frame(Shape::realize(ConvexBody::polytope(target)), cfg.r_out_factor, cfg.core_margin));
    frames.push_back(make_frame(Shape::realize(ConvexBody::polytope(body_at(scale))), cfg.r_out_factor, cfg.core_margin));
    c.frame = merge_frames(frames);
  }
  WeakConvergenceReport rep;
  auto ref = solve_capacitary(F, ConvexBody::polytope(target), c);
  SurfaceMeasure mt = face_measure(ref, target);
  rep.target_capacity = ref.capacity_energy;
  rep.noise_floor = 0.02 * mt.total_mass;
  const CapacitarySolution* warm = &ref;
  CapacitarySolution prev;
  for (int m = 0; m < steps; ++m) {
    double delta = scale * std::ldexp(1.0, -m);
    Polytope P = body_at(delta);
    auto sol = solve_capacitary(F, ConvexBody::polytope(P), c, warm);
    SurfaceMeasure mm = face_measure(sol, P);
    rep.deltas.push_back(delta);
    rep.distances.push_back(bounded_lipschitz(mm, mt));
    rep.capacities.push_back(sol.capacity_energy);
    prev = std::move(sol);
    warm = &prev;
  }
  rep.monotone = true;
  for (size_t k = 1; k < rep.distances.size(); ++k)
    if (rep.distances[k] > rep.distances[k - 1] + rep.noise_floor) rep.monotone = false;
  return rep;
}

}  // namespace capmink
