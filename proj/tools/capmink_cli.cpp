// Command-line front end over the C API.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "capmink/capmink.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitFail = 1, kExitInput = 2, kExitSolver = 3;

struct CliError {
  int exit_code;
  std::string message;
};

int exit_for(int status) {
  switch (status) {
    case CAPMINK_OK:
      return 0;
    case CAPMINK_E_SCHEMA:
    case CAPMINK_E_INADMISSIBLE:
    case CAPMINK_E_DOMAIN:
    case CAPMINK_E_ARGUMENT:
      return kExitInput;
    default:
      return kExitSolver;
  }
}

void check(int status, const std::string& what) {
  if (status != CAPMINK_OK)
    throw CliError{exit_for(status), what + ": " + capmink_status_name(status) + ": " + capmink_last_error()};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{kExitInput, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw CliError{kExitInput, what + ": " + e.what()};
  }
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// RAII wrappers over the opaque handles.
struct Structure {
  capmink_structure* h = nullptr;
  ~Structure() { capmink_structure_free(h); }
};
struct Body {
  capmink_body* h = nullptr;
  ~Body() { capmink_body_free(h); }
};
struct Result {
  capmink_result* h = nullptr;
  ~Result() { capmink_result_free(h); }
  json parsed() const { return json::parse(capmink_result_json(h)); }
};

struct Options {
  std::vector<std::string> bodies;
  std::string instance, structure, config, out = "capmink_out", suite;
  std::uint64_t seed = 1;
  std::optional<double> grid_h, r_out_factor;
  bool verbose = false;
};

struct Run {
  std::string command;
  std::vector<std::string> inputs;
  std::string input_digest;  // contents of every input, in order
  json effective;
  json structure;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void add_input(const std::string& path, const std::string& text) {
    inputs.push_back(path);
    input_digest += path + '\n' + text + '\n';
  }
};

void load_structure(const Options& o, Run& run, Structure& s) {
  if (o.structure.empty()) {
    check(capmink_structure_isotropic(3, 2, &s.h), "structure");
  } else {
    std::string text = read_file(o.structure);
    run.add_input(o.structure, text);
    parse_text(text, o.structure);
    check(capmink_structure_from_json(text.c_str(), &s.h), o.structure);
  }
  Result r;
  check(capmink_structure_describe(s.h, &r.h), "structure");
  run.structure = r.parsed();
}

void load_body(const std::string& path, Run& run, Body& b) {
  std::string text = read_file(path);
  run.add_input(path, text);
  parse_text(text, path);
  check(capmink_body_from_json(text.c_str(), &b.h), path);
}

void body_from_json(const json& j, Body& b) { check(capmink_body_from_json(j.dump().c_str(), &b.h), "body"); }

json load_config(const Options& o, Run& run) {
  if (o.config.empty()) return json::object();
  std::string text = read_file(o.config);
  run.add_input(o.config, text);
  json j = parse_text(text, o.config);
  if (!j.is_object()) throw CliError{kExitInput, o.config + ": config must be an object"};
  return j;
}

// Flags override the config file.
void apply_solver_flags(const Options& o, json& solver) {
  if (!solver.is_object()) solver = json::object();
  if (o.grid_h) solver["h"] = *o.grid_h;
  if (o.r_out_factor) solver["r_out_factor"] = *o.r_out_factor;
  if (o.verbose) solver["verbose"] = true;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw CliError{kExitInput, "cannot write " + p.string()};
  f << text;
}

// Appends the manifest line and returns its id. Results embed the id only,
// so their payload is reproducible.
std::string manifest_id(const Run& run) {
  return hex(fnv1a(run.effective.dump(), fnv1a(run.command + '\n' + run.input_digest)));
}

void append_manifest(const fs::path& dir, const Run& run, const std::string& id, const json& stats,
                     const std::vector<std::string>& outputs) {
  json m = {{"id", id},
            {"command", run.command},
            {"inputs", run.inputs},
            {"config_hash", hex(fnv1a(run.effective.dump()))},
            {"effective_config", run.effective},
            {"structure", run.structure},
            {"version", capmink_version()},
            {"outputs", outputs},
            {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - run.start).count()},
            {"started_unix", static_cast<long long>(std::time(nullptr))},
            {"stats", stats}};
  std::ofstream f(dir / "manifest.jsonl", std::ios::app);
  if (!f) throw CliError{kExitInput, "cannot append to " + (dir / "manifest.jsonl").string()};
  f << m.dump() << '\n';
}

fs::path out_dir(const Options& o) {
  fs::path d(o.out);
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw CliError{kExitInput, "cannot create " + d.string() + ": " + ec.message()};
  return d;
}

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_capacity(const Options& o) {
  Run run;
  run.command = "capacity";
  if (o.bodies.size() != 1) throw CliError{kExitInput, "capacity takes exactly one --body"};
  Structure s;
  load_structure(o, run, s);
  Body b;
  load_body(o.bodies[0], run, b);
  json cfg = load_config(o, run);
  apply_solver_flags(o, cfg["solver"]);
  run.effective = cfg;

  Result r;
  check(capmink_capacity(s.h, b.h, cfg.dump().c_str(), &r.h), "capacity");
  json j = r.parsed();
  const std::string id = manifest_id(run);
  j["manifest"] = id;
  fs::path dir = out_dir(o);
  write_text(dir / "capacity.json", j.dump(2) + "\n");
  std::vector<std::string> outputs = {"capacity.json"};
  const json& c = j["capacity"];
  append_manifest(dir, run, id,
                  {{"newton_iters", c.value("newton_iters", 0)},
                   {"cg_iters", c.value("cg_iters", 0)},
                   {"solver_seconds", c.value("seconds", 0.0)}},
                  outputs);
  std::printf("capacity %.10g (flux %.10g, discrepancy %.3g)\n", c.value("capacity_energy", 0.0),
              c.value("capacity_flux", 0.0), c.value("discrepancy", 0.0));
  return 0;
}

int cmd_minkowski(const Options& o) {
  Run run;
  run.command = "minkowski";
  if (o.instance.empty()) throw CliError{kExitInput, "minkowski needs --instance"};
  std::string text = read_file(o.instance);
  run.add_input(o.instance, text);
  json inst = parse_text(text, o.instance);
  json cfg = load_config(o, run);
  if (!o.structure.empty()) {
    std::string st = read_file(o.structure);
    run.add_input(o.structure, st);
    inst["structure"] = parse_text(st, o.structure);
  }
  apply_solver_flags(o, cfg["solver"]);
  if (!cfg.contains("seed")) cfg["seed"] = o.seed;
  cfg.erase("trace_csv");
  run.effective = cfg;
  if (inst.is_object() && inst.contains("structure")) run.structure = inst["structure"];

  Result adm;
  check(capmink_validate_instance(inst.dump().c_str(), &adm.h), o.instance);
  if (!capmink_result_pass(adm.h)) {
    json a = adm.parsed();
    std::string failed;
    for (auto& f : a["failed"]) failed += (failed.empty() ? "" : ", ") + f.get<std::string>();
    throw CliError{kExitInput, "Inadmissible: " + failed};
  }

  Result r;
  check(capmink_minkowski(inst.dump().c_str(), cfg.dump().c_str(), &r.h), "minkowski");
  json j = r.parsed();
  const std::string id = manifest_id(run);
  j["manifest"] = id;
  fs::path dir = out_dir(o);
  std::string csv = "iteration,gamma,kkt_residual,tangent_residual,capacity,step,accepted\n";
  for (auto& t : j["trace"])
    csv += std::to_string(t["iteration"].get<int>()) + "," + csv_number(t["gamma"]) + "," +
           csv_number(t["kkt_residual"]) + "," + csv_number(t["tangent_residual"]) + "," +
           csv_number(t["capacity"]) + "," + csv_number(t["step"]) + "," + (t["accepted"].get<bool>() ? "1" : "0") +
           "\n";
  write_text(dir / "minkowski.json", j.dump(2) + "\n");
  write_text(dir / "minkowski_trace.csv", csv);
  append_manifest(dir, run, id,
                  {{"iterations", j["iterations"]}, {"converged", j["converged"]}, {"solver_seconds", j["seconds"]}},
                  {"minkowski.json", "minkowski_trace.csv"});
  std::printf("gamma %.10g kkt %.4g residual %.4g converged %s\n", j["gamma"].get<double>(),
              j["kkt_residual"].get<double>(), j["residual"].get<double>(), j["converged"].get<bool>() ? "yes" : "no");
  if (j.contains("b")) std::printf("b %.10g\n", j["b"].get<double>());
  return 0;
}

json default_cube(double a) {
  json normals = json::array(), heights = json::array();
  for (int d = 0; d < 3; ++d)
    for (int s : {1, -1}) {
      json v = {0.0, 0.0, 0.0};
      v[d] = double(s);
      normals.push_back(v);
      heights.push_back(a);
    }
  return {{"kind", "polytope"}, {"normals", normals}, {"heights", heights}};
}

json default_ball(double r) { return {{"kind", "ball"}, {"center", {0.0, 0.0, 0.0}}, {"radius", r}}; }

int cmd_verify(const Options& o) {
  Run run;
  run.command = "verify " + o.suite;
  json cfg = load_config(o, run);
  fs::path dir = out_dir(o);
  Result r;
  std::vector<std::string> outputs;

  if (o.suite == "matrix") {
    int trials = cfg.value("trials", 10000);
    std::vector<int> dims = cfg.value("dims", std::vector<int>{2, 3, 4, 5});
    std::uint64_t seed = cfg.value("seed", o.seed);
    run.effective = {{"trials", trials}, {"dims", dims}, {"seed", seed}};
    json all = json::array();
    bool pass = true;
    for (int d : dims) {
      Result one;
      check(capmink_matrix_lemma(trials, d, seed + std::uint64_t(d), &one.h), "matrix");
      pass = pass && capmink_result_pass(one.h);
      all.push_back(one.parsed());
    }
    const std::string id = manifest_id(run);
    json j = {{"suite", "matrix"}, {"runs", all}, {"pass", pass}, {"manifest", id}};
    write_text(dir / "verify_matrix.json", j.dump(2) + "\n");
    append_manifest(dir, run, id, {{"pass", pass}}, {"verify_matrix.json"});
    std::printf("matrix suite %s\n", pass ? "pass" : "FAIL");
    return pass ? 0 : kExitFail;
  }

  Structure s;
  load_structure(o, run, s);
  // bodies: flags first, then config keys, then built-in defaults
  auto body_json = [&](size_t k, const char* key, const json& dflt) {
    if (o.bodies.size() > k) {
      std::string text = read_file(o.bodies[k]);
      run.add_input(o.bodies[k], text);
      return parse_text(text, o.bodies[k]);
    }
    if (cfg.contains(key)) return cfg[key];
    return dflt;
  };
  json sub = cfg;
  for (const char* k : {"e1", "e2", "body", "trials", "dims", "seed"}) sub.erase(k);
  apply_solver_flags(o, sub["solver"]);

  if (o.suite == "bm" || o.suite == "hadamard") {
    json j1 = body_json(0, "e1", default_cube(0.5));
    json j2 = body_json(1, "e2", default_ball(0.5));
    Body b1, b2;
    body_from_json(j1, b1);
    body_from_json(j2, b2);
    run.effective = sub;
    run.effective["e1"] = j1;
    run.effective["e2"] = j2;
    if (o.suite == "bm")
      check(capmink_verify_bm(s.h, b1.h, b2.h, sub.dump().c_str(), &r.h), "bm");
    else
      check(capmink_verify_hadamard(s.h, b1.h, b2.h, sub.dump().c_str(), &r.h), "hadamard");
  } else if (o.suite == "laws") {
    json jb = body_json(0, "body", default_ball(1.0));
    Body b;
    body_from_json(jb, b);
    std::uint64_t seed = cfg.value("seed", o.seed);
    run.effective = sub;
    run.effective["body"] = jb;
    run.effective["seed"] = seed;
    check(capmink_verify_laws(s.h, b.h, sub.dump().c_str(), seed, &r.h), "laws");
  } else {
    throw CliError{kExitInput, "unknown suite: " + o.suite};
  }

  json j = r.parsed();
  const bool pass = capmink_result_pass(r.h);
  const std::string id = manifest_id(run);
  j["suite"] = o.suite;
  j["pass"] = pass;
  j["manifest"] = id;
  const std::string name = "verify_" + o.suite;
  write_text(dir / (name + ".json"), j.dump(2) + "\n");
  outputs.push_back(name + ".json");
  if (o.suite == "bm") {
    std::string csv = "lambda,lhs,rhs,slack,error_bar\n";
    for (size_t i = 0; i < j["lambda_grid"].size(); ++i)
      csv += csv_number(j["lambda_grid"][i]) + "," + csv_number(j["lhs_values"][i]) + "," +
             csv_number(j["rhs_values"][i]) + "," +
             csv_number(j["slack"][i]) + "," + csv_number(j["error_bar"][i]) + "\n";
    write_text(dir / "verify_bm.csv", csv);
    outputs.push_back("verify_bm.csv");
  } else if (o.suite == "hadamard") {
    std::string csv = "delta,difference,rel_error\n";
    for (size_t i = 0; i < j["deltas"].size(); ++i)
      csv += csv_number(j["deltas"][i]) + "," + csv_number(j["differences"][i]) + "," +
             csv_number(j["rel_errors"][i]) + "\n";
    write_text(dir / "verify_hadamard.csv", csv);
    outputs.push_back("verify_hadamard.csv");
  }
  append_manifest(dir, run, id, {{"pass", pass}}, outputs);
  std::printf("%s suite %s\n", o.suite.c_str(), pass ? "pass" : "FAIL");
  return pass ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic capacity, Brunn-Minkowski checks and the discrete Minkowski problem"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* c) {
    c->add_option("--structure", o.structure, "structure JSON (default isotropic n=3 p=2)");
    c->add_option("--config", o.config, "config JSON");
    c->add_option("--out", o.out, "output directory")->capture_default_str();
    c->add_option("--seed", o.seed, "seed for sampling and perturbations")->capture_default_str();
    c->add_option("--grid-h", o.grid_h, "grid spacing near the body");
    c->add_option("--r-out-factor", o.r_out_factor, "outer radius over the body radius");
    c->add_flag("--verbose", o.verbose, "solver progress on stderr");
  };
  auto* cap = app.add_subcommand("capacity", "solve the capacitary problem for one body");
  common(cap);
  cap->add_option("--body", o.bodies, "body JSON")->required();
  auto* mk = app.add_subcommand("minkowski", "solve a discrete Minkowski instance");
  common(mk);
  mk->add_option("--instance", o.instance, "instance JSON")->required();
  auto* ver = app.add_subcommand("verify", "run a verification suite");
  common(ver);
  ver->add_option("--suite", o.suite, "bm, hadamard, laws or matrix")
      ->required()
      ->check(CLI::IsMember({"bm", "hadamard", "laws", "matrix"}));
  ver->add_option("--body", o.bodies, "body JSON (twice for bm and hadamard)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }
  try {
    if (*cap) return cmd_capacity(o);
    if (*mk) return cmd_minkowski(o);
    return cmd_verify(o);
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  }
}
