#include "capmink/capmink.h"

#include <exception>
#include <new>
#include <string>

#include <json.hpp>

#include "capmink/bm_verify.hpp"
#include "capmink/error.hpp"
#include "capmink/measure.hpp"
#include "capmink/minkowski.hpp"
#include "capmink/pde.hpp"

#ifndef CAPMINK_VERSION
#define CAPMINK_VERSION "0.0.0"
#endif

using nlohmann::json;

struct capmink_structure {
  capmink::StructurePtr s;
};
struct capmink_body {
  capmink::ConvexBody b = capmink::ConvexBody::ball({0, 0, 0}, 1);
};
struct capmink_result {
  std::string text;
  bool pass = false;
};

namespace {

thread_local std::string g_error;

template <class Fn>
int guarded(Fn&& fn) {
  g_error.clear();
  try {
    fn();
    return CAPMINK_OK;
  } catch (const capmink::Error& e) {
    g_error = e.what();
    return int(e.code());
  } catch (const json::exception& e) {
    g_error = e.what();
    return CAPMINK_E_SCHEMA;
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
    return CAPMINK_E_INTERNAL;
  } catch (const std::exception& e) {
    g_error = e.what();
    return CAPMINK_E_INTERNAL;
  }
}

json parse(const char* text, const char* what) {
  if (!text) capmink::fail(capmink::ErrorCode::Schema, std::string(what) + ": null text");
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    capmink::fail(capmink::ErrorCode::Schema, std::string(what) + ": " + e.what());
  }
}

json parse_config(const char* text) { return text && *text ? parse(text, "config") : json::object(); }

void check_keys(const json& j, std::initializer_list<const char*> keys) {
  if (!j.is_object()) capmink::fail(capmink::ErrorCode::Schema, "config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) capmink::fail(capmink::ErrorCode::Schema, "unknown config key: " + it.key());
  }
}

capmink::SolverConfig solver_of(const json& cfg) {
  return cfg.contains("solver") ? capmink::SolverConfig::from_json(cfg["solver"]) : capmink::SolverConfig{};
}

template <class T>
T get_or(const json& j, const char* key, T dflt) {
  return j.contains(key) ? j[key].get<T>() : dflt;
}

std::shared_ptr<const capmink::FundamentalSolution> fundamental(const capmink_structure* s) {
  return std::make_shared<const capmink::FundamentalSolution>(capmink::dual_support(s->s));
}

void emit(capmink_result** out, const json& j, bool pass) {
  auto* r = new capmink_result;
  r->text = j.dump(2);
  r->pass = pass;
  *out = r;
}

}  // namespace

extern "C" {

const char* capmink_version(void) { return CAPMINK_VERSION; }

const char* capmink_status_name(int status) {
  if (status == CAPMINK_E_ARGUMENT) return "Argument";
  if (status < 0 || status > CAPMINK_E_INTERNAL) return "Unknown";
  return capmink::error_name(capmink::ErrorCode(status));
}

const char* capmink_last_error(void) { return g_error.c_str(); }

int capmink_structure_from_json(const char* text, capmink_structure** out) {
  if (!out) return CAPMINK_E_ARGUMENT;
  *out = nullptr;
  return guarded([&] {
    auto s = capmink::structure_from_json(parse(text, "structure"));
    *out = new capmink_structure{std::move(s)};
  });
}

int capmink_structure_isotropic(int n, double p, capmink_structure** out) {
  if (!out) return CAPMINK_E_ARGUMENT;
  *out = nullptr;
  return guarded([&] { *out = new capmink_structure{capmink::make_isotropic(n, p)}; });
}

void capmink_structure_free(capmink_structure* s) { delete s; }

int capmink_structure_validate(const capmink_structure* s, int samples, uint64_t seed, capmink_result** out) {
  if (!s || !out) return CAPMINK_E_ARGUMENT;
  *out = nullptr;
  return guarded([&] {
    auto rep = capmink::validate_structure(*s->s, samples, seed);
    emit(out, rep.to_json(), rep.pass);
  });
}

int capmink_structure_describe(const capmink_structure* s, capmink_result** out) {
  if (!s || !out) return CAPMINK_E_ARGUMENT;
  *out = nullptr;
  return guarded([&] { emit(out, s->s->to_json(), true); });
}

int capmink_body_from_json(const char* text, capmink_body** out) {
  if (!out) return CAPMINK_E_ARGUMENT;
  *out = nullptr;
  return guarded([&] {
    auto b = capmink::ConvexBody::from_json(parse(text, "body"));
    *out = new capmink_body{std::move(b)};
  });
}

void capmink_body_free(capmink_body* b) { delete b; }

int capmink_capacity(const capmink_structure* s, const capmink_body* body, const char* config, capmink_result** out) {
  if (!s || !body || !out) return CAPMINK_E_ARGUMENT;
  *out = nullptr;
  return guarded([&] {
    json cfg = parse_config(config);
    check_keys(cfg, {"solver", "levels", "measure_offset"});
    auto sc = solver_of(cfg);
    auto levels = get_or<std::vector<double>>(cfg, "levels", {0.2, 0.5, 0.8});
    double offset = get_or<double>(cfg, "measure_offset", 2.0);
    if (body->b.dim() != s->s->dim()) capmink::fail(capmink::ErrorCode::Domain, "body and structure dimensions differ");

    auto sol = capmink::solve_capacitary(fundamental(s), body->b, sc);
    auto radii = capmink::inner_outer_radius(body->b);
    auto radial = capmink::check_radial_monotonicity(sol, radii.chebyshev_center);
    auto conv = capmink::check_level_convexity(sol, levels);
    json j = {{"capacity", sol.to_json()},
              {"error_bar", sol.error_bar()},
              {"decay", radial.to_json()},
              {"level_convexity", conv.to_json()}};
    if (body->b.kind() == capmink::ConvexBody::Kind::Polytope)
      j["measure"] = capmink::face_measure(sol, body->b.as_polytope(), offset).to_json();
    emit(out, j, sol.discrepancy >= 0);
  });
}

int capmink_minkowski(const char* instance, const char* config, capmink_result** out) {
  if (!out) return CAPMINK_E_ARGUMENT;
  *out = nullptr;
  return guarded([&] {
    auto inst = capmink::MinkowskiInstance::from_json(parse(instance, "instance"));
    json cj = parse_config(config);
    auto cfg = capmink::MinkowskiConfig::from_json(cj);
    auto sol = capmink::solve_minkowski(inst, cfg);
    emit(out, sol.to_json(), sol.converged);
  });
}

int capmink_validate_instance(const char* instance, capmink_result** out) {
  if (!out) return CAPMINK_E_ARGUMENT;
  *out = nullptr;
  return guarded([&] {
    auto inst = capmink::MinkowskiInstance::from_json(parse(instance, "instance"));
    auto rep = capmink::validate_instance(inst, 4000, 1e-4, false);
    emit(out, rep.to_json(), rep.admissible);
  });
}

int capmink_verify_bm(const capmink_structure* s, const capmink_body* e1, const capmink_body* e2, const char* config,
                      capmink_result** out) {
  if (!s || !e1 || !e2 || !out) return CAPMINK_E_ARGUMENT;
  *out = nullptr;
  return guarded([&] {
    json cfg = parse_config(config);
    check_keys(cfg, {"solver", "lambdas"});
    auto lambdas = get_or<std::vector<double>>(cfg, "lambdas", {0.25, 0.5, 0.75});
    auto rep = capmink::verify_bm(fundamental(s), e1->b, e2->b, lambdas, solver_of(cfg));
    emit(out, rep.to_json(), rep.nonnegative);
  });
}

int capmink_verify_hadamard(const capmink_structure* s, const capmink_body* e1, const capmink_body* e2,
                            const char* config, capmink_result** out) {
  if (!s || !e1 || !e2 || !out) return CAPMINK_E_ARGUMENT;
  *out = nullptr;
  return guarded([&] {
    json cfg = parse_config(config);
    check_keys(cfg, {"solver", "t0", "deltas", "tolerance"});
    double t0 = get_or<double>(cfg, "t0", 0.5);
    auto deltas = get_or<std::vector<double>>(cfg, "deltas", {0.2, 0.1, 0.05});
    double tol = get_or<double>(cfg, "tolerance", 0.08);
    auto rep = capmink::verify_hadamard(fundamental(s), e1->b, e2->b, t0, deltas, solver_of(cfg));
    json j = rep.to_json();
    j["tolerance"] = tol;
    emit(out, j, rep.rel_error <= tol);
  });
}

int capmink_verify_laws(const capmink_structure* s, const capmink_body* e, const char* config, uint64_t seed,
                        capmink_result** out) {
  if (!s || !e || !out) return CAPMINK_E_ARGUMENT;
  *out = nullptr;
  return guarded([&] {
    json cfg = parse_config(config);
    check_keys(cfg, {"solver", "rhos"});
    auto rhos = get_or<std::vector<double>>(cfg, "rhos", {0.5, 2.0});
    auto rep = capmink::verify_laws(fundamental(s), e->b, solver_of(cfg), seed, rhos);
    emit(out, rep.to_json(), rep.pass);
  });
}

int capmink_matrix_lemma(int trials, int dim, uint64_t seed, capmink_result** out) {
  if (!out) return CAPMINK_E_ARGUMENT;
  *out = nullptr;
  return guarded([&] {
    auto rep = capmink::matrix_lemma_test(trials, dim, seed);
    emit(out, rep.to_json(), rep.pass);
  });
}

const char* capmink_result_json(const capmink_result* r) { return r ? r->text.c_str() : ""; }

int capmink_result_pass(const capmink_result* r) { return r && r->pass ? 1 : 0; }

void capmink_result_free(capmink_result* r) { delete r; }

}  // extern "C"
